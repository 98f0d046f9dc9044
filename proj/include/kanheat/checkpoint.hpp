#pragma once

#include <filesystem>
#include <iosfwd>

#include "kanheat/kan.hpp"
#include "kanheat/mlp.hpp"

namespace kanheat {

// Versioned structured-text checkpoints. Reals are written as hexadecimal
// floating point so a save/load round trip is bit-exact.
inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(const KanNetwork& net, std::ostream& os);
void save_checkpoint(const MlpNetwork& net, std::ostream& os);
KanNetwork load_kan_checkpoint(std::istream& is);
MlpNetwork load_mlp_checkpoint(std::istream& is);

void save_checkpoint(const KanNetwork& net, const std::filesystem::path& path);
void save_checkpoint(const MlpNetwork& net, const std::filesystem::path& path);
KanNetwork load_kan_checkpoint(const std::filesystem::path& path);
MlpNetwork load_mlp_checkpoint(const std::filesystem::path& path);

}  // namespace kanheat

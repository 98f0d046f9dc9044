#include "kanheat/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "kanheat/errors.hpp"

namespace kanheat {

namespace {

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

void write_reals(std::ostream& os, const char* tag, const std::vector<double>& v) {
  os << tag << ' ' << v.size();
  for (double x : v) os << ' ' << hex(x);
  os << '\n';
}

class Reader {
 public:
  explicit Reader(std::istream& is) : is_(is) {}

  std::string word() {
    std::string w;
    if (!(is_ >> w)) throw DataError("checkpoint: unexpected end of input");
    return w;
  }
  void expect(const std::string& w) {
    const std::string got = word();
    if (got != w) throw DataError("checkpoint: expected '" + w + "', found '" + got + "'");
  }
  long integer() {
    const std::string w = word();
    char* end = nullptr;
    const long v = std::strtol(w.c_str(), &end, 10);
    if (end == w.c_str() || *end != '\0') throw DataError("checkpoint: bad integer '" + w + "'");
    return v;
  }
  double real() {
    const std::string w = word();
    char* end = nullptr;
    const double v = std::strtod(w.c_str(), &end);
    if (end == w.c_str() || *end != '\0') throw DataError("checkpoint: bad real '" + w + "'");
    return v;
  }
  std::vector<double> reals(const std::string& tag) {
    expect(tag);
    const long n = integer();
    if (n < 0) throw DataError("checkpoint: negative length");
    std::vector<double> v(static_cast<std::size_t>(n));
    for (double& x : v) x = real();
    return v;
  }

 private:
  std::istream& is_;
};

void write_header(std::ostream& os, const char* model, const std::vector<int>& widths) {
  os << "kanheat-checkpoint " << kCheckpointVersion << '\n';
  os << "model " << model << '\n';
  os << "widths " << widths.size();
  for (int w : widths) os << ' ' << w;
  os << '\n';
}

std::vector<int> read_header(Reader& r, const std::string& model) {
  r.expect("kanheat-checkpoint");
  const long version = r.integer();
  if (version != kCheckpointVersion) {
    throw DataError("checkpoint: unsupported version " + std::to_string(version));
  }
  r.expect("model");
  const std::string m = r.word();
  if (m != model) throw DataError("checkpoint: expected model '" + model + "', found '" + m + "'");
  r.expect("widths");
  const long n = r.integer();
  std::vector<int> widths(static_cast<std::size_t>(n));
  for (int& w : widths) w = static_cast<int>(r.integer());
  return widths;
}

}  // namespace

void save_checkpoint(const KanNetwork& net, std::ostream& os) {
  write_header(os, "kan", net.widths());
  os << "grid " << net.intervals() << ' ' << net.degree() << '\n';
  for (int l = 0; l < net.depth(); ++l) {
    const auto& layer = net.layer(l);
    os << "layer " << l << ' ' << layer.n_in << ' ' << layer.n_out << '\n';
    for (const auto& e : layer.edges) {
      os << "edge\n";
      write_reals(os, "knots", e.grid.knots());
      write_reals(os, "coeffs", e.coeffs);
      os << "weights " << hex(e.base_weight) << ' ' << hex(e.spline_weight) << '\n';
      if (e.lock) {
        const auto& a = e.lock->affine;
        os << "lock " << e.lock->op->name << ' ' << hex(a.a) << ' ' << hex(a.b) << ' ' << hex(a.c) << ' '
           << hex(a.d) << ' ' << (e.lock->trainable ? 1 : 0) << '\n';
      } else {
        os << "lock none\n";
      }
    }
    write_reals(os, "biases", layer.biases);
  }
  os << "end\n";
}

KanNetwork load_kan_checkpoint(std::istream& is) {
  Reader r(is);
  const auto widths = read_header(r, "kan");
  r.expect("grid");
  const int G = static_cast<int>(r.integer());
  const int k = static_cast<int>(r.integer());
  KanNetwork net(widths, G, k);
  for (int l = 0; l < net.depth(); ++l) {
    r.expect("layer");
    if (r.integer() != l) throw DataError("checkpoint: layers out of order");
    auto& layer = net.layer(l);
    if (r.integer() != layer.n_in || r.integer() != layer.n_out) throw DataError("checkpoint: layer shape mismatch");
    for (auto& e : layer.edges) {
      r.expect("edge");
      auto knots = r.reals("knots");
      e.grid = KnotGrid(std::move(knots), G, k);
      e.coeffs = r.reals("coeffs");
      if (e.coeffs.size() != static_cast<std::size_t>(G + k)) throw DataError("checkpoint: coefficient count");
      r.expect("weights");
      e.base_weight = r.real();
      e.spline_weight = r.real();
      r.expect("lock");
      const std::string op = r.word();
      if (op == "none") {
        e.lock.reset();
      } else {
        SymbolicLock lock;
        lock.op = &find_operator(op);
        lock.affine.a = r.real();
        lock.affine.b = r.real();
        lock.affine.c = r.real();
        lock.affine.d = r.real();
        lock.trainable = r.integer() != 0;
        e.lock = lock;
      }
    }
    layer.biases = r.reals("biases");
    if (layer.biases.size() != static_cast<std::size_t>(layer.n_out)) throw DataError("checkpoint: bias count");
  }
  r.expect("end");
  return net;
}

void save_checkpoint(const MlpNetwork& net, std::ostream& os) {
  write_header(os, "mlp", net.widths());
  for (int l = 0; l < net.depth(); ++l) {
    os << "layer " << l << '\n';
    write_reals(os, "weights", net.weights(l));
    write_reals(os, "biases", net.biases(l));
  }
  os << "end\n";
}

MlpNetwork load_mlp_checkpoint(std::istream& is) {
  Reader r(is);
  MlpNetwork net(read_header(r, "mlp"));
  for (int l = 0; l < net.depth(); ++l) {
    r.expect("layer");
    if (r.integer() != l) throw DataError("checkpoint: layers out of order");
    auto w = r.reals("weights");
    auto b = r.reals("biases");
    if (w.size() != net.weights(l).size() || b.size() != net.biases(l).size()) {
      throw DataError("checkpoint: layer shape mismatch");
    }
    net.weights(l) = std::move(w);
    net.biases(l) = std::move(b);
  }
  r.expect("end");
  return net;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write checkpoint " + path.string());
  return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read checkpoint " + path.string());
  return is;
}

}  // namespace

void save_checkpoint(const KanNetwork& net, const std::filesystem::path& path) {
  auto os = open_out(path);
  save_checkpoint(net, os);
}

void save_checkpoint(const MlpNetwork& net, const std::filesystem::path& path) {
  auto os = open_out(path);
  save_checkpoint(net, os);
}

KanNetwork load_kan_checkpoint(const std::filesystem::path& path) {
  auto is = open_in(path);
  return load_kan_checkpoint(is);
}

MlpNetwork load_mlp_checkpoint(const std::filesystem::path& path) {
  auto is = open_in(path);
  return load_mlp_checkpoint(is);
}

}  // namespace kanheat

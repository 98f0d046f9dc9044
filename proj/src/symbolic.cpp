#include "kanheat/symbolic.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>
#include <unordered_map>

#include "kanheat/errors.hpp"
#include "kanheat/format.hpp"

namespace kanheat {

namespace {

using Kind = Expr::Kind;

constexpr double kProtectedDenominator = 1e-12;

std::shared_ptr<Expr> node(Kind kind) {
  auto e = std::make_shared<Expr>();
  e->kind = kind;
  return e;
}

bool is_const(const ExprPtr& e) { return e->kind == Kind::Constant; }

double apply_value(const Operator& op, const AffineParams& p, double v) {
  return p.c * op.eval(op.clamp_to_domain(p.a * v + p.b)) + p.d;
}

double protected_div(double num, double den) {
  return std::abs(den) < kProtectedDenominator ? 1.0 : num / den;
}

}  // namespace

ExprPtr make_constant(double v) {
  auto e = node(Kind::Constant);
  e->value = v;
  return e;
}

ExprPtr make_variable(int index) {
  if (index < 0) throw ConfigError("variable index must be >= 0");
  auto e = node(Kind::Variable);
  e->var = index;
  return e;
}

ExprPtr make_apply(const Operator& op, AffineParams affine, ExprPtr child) {
  auto e = node(Kind::Apply);
  e->op = &op;
  e->affine = affine;
  e->children = {std::move(child)};
  return e;
}

ExprPtr make_sum(std::vector<ExprPtr> terms, std::vector<double> coefs, double constant) {
  if (terms.size() != coefs.size()) throw ShapeError("make_sum: one coefficient per term");
  auto e = node(Kind::Sum);
  e->children = std::move(terms);
  e->coefs = std::move(coefs);
  e->value = constant;
  return e;
}

ExprPtr make_binary(Expr::Kind kind, ExprPtr lhs, ExprPtr rhs) {
  if (kind != Kind::Add && kind != Kind::Sub && kind != Kind::Mul && kind != Kind::Div) {
    throw ConfigError("make_binary: not a binary kind");
  }
  auto e = node(kind);
  e->children = {std::move(lhs), std::move(rhs)};
  return e;
}

ExprPtr make_numeric(SplineEdge edge, ExprPtr child) {
  auto e = node(Kind::Numeric);
  e->edge = std::make_shared<const SplineEdge>(std::move(edge));
  e->children = {std::move(child)};
  return e;
}

double evaluate(const Expr& e, std::span<const double> x) {
  switch (e.kind) {
    case Kind::Constant:
      return e.value;
    case Kind::Variable:
      if (static_cast<std::size_t>(e.var) >= x.size()) throw ShapeError("evaluate: variable index out of range");
      return x[static_cast<std::size_t>(e.var)];
    case Kind::Apply:
      return apply_value(*e.op, e.affine, evaluate(*e.children[0], x));
    case Kind::Sum: {
      double s = e.value;
      for (std::size_t i = 0; i < e.children.size(); ++i) s += e.coefs[i] * evaluate(*e.children[i], x);
      return s;
    }
    case Kind::Add:
      return evaluate(*e.children[0], x) + evaluate(*e.children[1], x);
    case Kind::Sub:
      return evaluate(*e.children[0], x) - evaluate(*e.children[1], x);
    case Kind::Mul:
      return evaluate(*e.children[0], x) * evaluate(*e.children[1], x);
    case Kind::Div:
      return protected_div(evaluate(*e.children[0], x), evaluate(*e.children[1], x));
    case Kind::Numeric:
      return e.edge->eval(evaluate(*e.children[0], x));
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// S-expression form

namespace {

void write_sexpr(const Expr& e, std::string& out) {
  switch (e.kind) {
    case Kind::Constant:
      out += "(const " + format_real(e.value) + ")";
      return;
    case Kind::Variable:
      out += "(var " + std::to_string(e.var) + ")";
      return;
    case Kind::Apply: {
      const auto& p = e.affine;
      out += "(apply \"" + e.op->name + "\" " + format_real(p.a) + " " + format_real(p.b) + " " + format_real(p.c) +
             " " + format_real(p.d) + " ";
      write_sexpr(*e.children[0], out);
      out += ")";
      return;
    }
    case Kind::Sum:
      out += "(sum " + format_real(e.value);
      for (std::size_t i = 0; i < e.children.size(); ++i) {
        out += " " + format_real(e.coefs[i]) + " ";
        write_sexpr(*e.children[i], out);
      }
      out += ")";
      return;
    case Kind::Add:
    case Kind::Sub:
    case Kind::Mul:
    case Kind::Div: {
      const char* tag = e.kind == Kind::Add ? "add" : e.kind == Kind::Sub ? "sub" : e.kind == Kind::Mul ? "mul" : "div";
      out += std::string("(") + tag + " ";
      write_sexpr(*e.children[0], out);
      out += " ";
      write_sexpr(*e.children[1], out);
      out += ")";
      return;
    }
    case Kind::Numeric: {
      const SplineEdge& s = *e.edge;
      out += "(numeric " + std::to_string(s.grid.intervals()) + " " + std::to_string(s.grid.degree()) + " (";
      for (std::size_t i = 0; i < s.grid.knots().size(); ++i) {
        if (i) out += " ";
        out += format_real(s.grid.knots()[i]);
      }
      out += ") (";
      for (std::size_t i = 0; i < s.coeffs.size(); ++i) {
        if (i) out += " ";
        out += format_real(s.coeffs[i]);
      }
      out += ") " + format_real(s.base_weight) + " " + format_real(s.spline_weight) + " ";
      write_sexpr(*e.children[0], out);
      out += ")";
      return;
    }
  }
}

class SexprParser {
 public:
  explicit SexprParser(const std::string& text) : s_(text) {}

  ExprPtr parse_all() {
    ExprPtr e = parse();
    skip_ws();
    if (pos_ != s_.size()) fail("trailing characters");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw DataError("s-expression parse error at offset " + std::to_string(pos_) + ": " + msg);
  }
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  void expect(char c) {
    skip_ws();
    if (pos_ >= s_.size() || s_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  std::string atom() {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == '"') {
      const std::size_t close = s_.find('"', pos_ + 1);
      if (close == std::string::npos) fail("unterminated string");
      std::string out = s_.substr(pos_ + 1, close - pos_ - 1);
      pos_ = close + 1;
      return out;
    }
    const std::size_t start = pos_;
    while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) && s_[pos_] != '(' &&
           s_[pos_] != ')') {
      ++pos_;
    }
    if (start == pos_) fail("expected atom");
    return s_.substr(start, pos_ - start);
  }
  double number() {
    const std::string a = atom();
    double v = 0.0;
    const auto res = std::from_chars(a.data(), a.data() + a.size(), v);
    if (res.ec != std::errc() || res.ptr != a.data() + a.size()) fail("bad number '" + a + "'");
    return v;
  }
  bool peek_close() {
    skip_ws();
    return pos_ < s_.size() && s_[pos_] == ')';
  }
  std::vector<double> number_list() {
    expect('(');
    std::vector<double> v;
    while (!peek_close()) v.push_back(number());
    expect(')');
    return v;
  }

  ExprPtr parse() {
    expect('(');
    const std::string tag = atom();
    ExprPtr out;
    if (tag == "const") {
      out = make_constant(number());
    } else if (tag == "var") {
      out = make_variable(static_cast<int>(number()));
    } else if (tag == "apply") {
      const Operator& op = find_operator(atom());
      AffineParams p;
      p.a = number();
      p.b = number();
      p.c = number();
      p.d = number();
      out = make_apply(op, p, parse());
    } else if (tag == "sum") {
      const double k = number();
      std::vector<ExprPtr> terms;
      std::vector<double> coefs;
      while (!peek_close()) {
        coefs.push_back(number());
        terms.push_back(parse());
      }
      out = make_sum(std::move(terms), std::move(coefs), k);
    } else if (tag == "add" || tag == "sub" || tag == "mul" || tag == "div") {
      const Kind kind = tag == "add" ? Kind::Add : tag == "sub" ? Kind::Sub : tag == "mul" ? Kind::Mul : Kind::Div;
      ExprPtr l = parse();
      ExprPtr r = parse();
      out = make_binary(kind, std::move(l), std::move(r));
    } else if (tag == "numeric") {
      const int g = static_cast<int>(number());
      const int k = static_cast<int>(number());
      auto knots = number_list();
      auto coeffs = number_list();
      SplineEdge edge(KnotGrid(std::move(knots), g, k));
      if (coeffs.size() != edge.coeffs.size()) fail("numeric coefficient count");
      edge.coeffs = std::move(coeffs);
      edge.base_weight = number();
      edge.spline_weight = number();
      out = make_numeric(std::move(edge), parse());
    } else {
      fail("unknown tag '" + tag + "'");
    }
    expect(')');
    return out;
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string to_sexpr(const Expr& e) {
  std::string out;
  write_sexpr(e, out);
  return out;
}

ExprPtr parse_sexpr(const std::string& text) { return SexprParser(text).parse_all(); }

bool structurally_equal(const Expr& a, const Expr& b) { return to_sexpr(a) == to_sexpr(b); }

// ---------------------------------------------------------------------------
// Simplification

namespace {

class Simplifier {
 public:
  ExprPtr run(const ExprPtr& e) {
    if (auto it = memo_.find(e.get()); it != memo_.end()) return it->second;
    ExprPtr out = step(e);
    memo_.emplace(e.get(), out);
    keep_.push_back(e);
    return out;
  }

 private:
  const std::string& key(const ExprPtr& e) {
    if (auto it = keys_.find(e.get()); it != keys_.end()) return it->second;
    keep_.push_back(e);
    return keys_.emplace(e.get(), to_sexpr(*e)).first->second;
  }

  ExprPtr normalize_sum(const std::vector<ExprPtr>& terms, const std::vector<double>& coefs, double constant) {
    std::vector<ExprPtr> out_terms;
    std::vector<double> out_coefs;
    std::unordered_map<std::string, std::size_t> index;
    auto add = [&](const ExprPtr& t, double k) {
      const std::string& kk = key(t);
      if (auto it = index.find(kk); it != index.end()) {
        out_coefs[it->second] += k;
      } else {
        index.emplace(kk, out_terms.size());
        out_terms.push_back(t);
        out_coefs.push_back(k);
      }
    };
    for (std::size_t i = 0; i < terms.size(); ++i) {
      const ExprPtr& t = terms[i];
      const double k = coefs[i];
      if (t->kind == Kind::Constant) {
        constant += k * t->value;
      } else if (t->kind == Kind::Sum) {
        constant += k * t->value;
        for (std::size_t j = 0; j < t->children.size(); ++j) add(t->children[j], k * t->coefs[j]);
      } else {
        add(t, k);
      }
    }
    std::vector<ExprPtr> kept;
    std::vector<double> kept_coefs;
    for (std::size_t i = 0; i < out_terms.size(); ++i) {
      if (out_coefs[i] != 0.0) {
        kept.push_back(out_terms[i]);
        kept_coefs.push_back(out_coefs[i]);
      }
    }
    if (kept.empty()) return make_constant(constant);
    if (kept.size() == 1 && kept_coefs[0] == 1.0 && constant == 0.0) return kept[0];
    return make_sum(std::move(kept), std::move(kept_coefs), constant);
  }

  ExprPtr step(const ExprPtr& e) {
    switch (e->kind) {
      case Kind::Constant:
      case Kind::Variable:
        return e;
      case Kind::Numeric: {
        ExprPtr c = run(e->children[0]);
        if (is_const(c)) return make_constant(e->edge->eval(c->value));
        if (c == e->children[0]) return e;
        auto n = std::make_shared<Expr>(*e);
        n->children = {c};
        return n;
      }
      case Kind::Apply: {
        ExprPtr c = run(e->children[0]);
        const Operator& op = *e->op;
        AffineParams p = e->affine;
        if (op.name == "0") return make_constant(p.d);
        if (is_const(c)) return make_constant(apply_value(op, p, c->value));
        if (c->kind == Kind::Sum && c->children.size() == 1) {
          p.b = p.a * c->value + p.b;
          p.a = p.a * c->coefs[0];
          c = c->children[0];
        }
        if (op.name == "x") return normalize_sum({c}, {p.c * p.a}, p.c * p.b + p.d);
        if (p.a == 0.0) return make_constant(apply_value(op, p, 0.0));
        AffineParams inner{p.a, p.b, 1.0, 0.0};
        ExprPtr core = make_apply(op, inner, c);
        if (p.c == 1.0 && p.d == 0.0) return core;
        return normalize_sum({core}, {p.c}, p.d);
      }
      case Kind::Sum: {
        std::vector<ExprPtr> terms;
        terms.reserve(e->children.size());
        for (const auto& c : e->children) terms.push_back(run(c));
        return normalize_sum(terms, e->coefs, e->value);
      }
      case Kind::Add:
      case Kind::Sub: {
        ExprPtr l = run(e->children[0]);
        ExprPtr r = run(e->children[1]);
        return normalize_sum({l, r}, {1.0, e->kind == Kind::Add ? 1.0 : -1.0}, 0.0);
      }
      case Kind::Mul: {
        ExprPtr l = run(e->children[0]);
        ExprPtr r = run(e->children[1]);
        if (is_const(l) && is_const(r)) return make_constant(l->value * r->value);
        if (is_const(l)) return normalize_sum({r}, {l->value}, 0.0);
        if (is_const(r)) return normalize_sum({l}, {r->value}, 0.0);
        return make_binary(Kind::Mul, l, r);
      }
      case Kind::Div: {
        ExprPtr l = run(e->children[0]);
        ExprPtr r = run(e->children[1]);
        if (is_const(r)) {
          if (std::abs(r->value) < kProtectedDenominator) return make_constant(1.0);
          if (is_const(l)) return make_constant(l->value / r->value);
          return normalize_sum({l}, {1.0 / r->value}, 0.0);
        }
        return make_binary(Kind::Div, l, r);
      }
    }
    return e;
  }

  std::unordered_map<const Expr*, ExprPtr> memo_;
  std::unordered_map<const Expr*, std::string> keys_;
  std::vector<ExprPtr> keep_;  // pins keyed nodes so addresses are not reused
};

}  // namespace

ExprPtr simplify(const ExprPtr& e) {
  Simplifier s;
  return s.run(e);
}

// ---------------------------------------------------------------------------
// Measures

namespace {

template <class F>
long long fold_tree(const Expr& e, std::unordered_map<const Expr*, long long>& memo, const F& own) {
  if (auto it = memo.find(&e); it != memo.end()) return it->second;
  long long total = own(e);
  for (const auto& c : e.children) total += fold_tree(*c, memo, own);
  memo.emplace(&e, total);
  return total;
}

}  // namespace

int complexity(const Expr& e) {
  long long terms = 1;
  if (e.kind == Kind::Sum) terms = static_cast<long long>(e.children.size()) + (e.value != 0.0 ? 1 : 0);
  std::unordered_map<const Expr*, long long> memo;
  const long long ops = fold_tree(e, memo, [](const Expr& n) -> long long {
    switch (n.kind) {
      case Kind::Apply:
        return n.op->name == "x" ? 0 : 1;
      case Kind::Numeric:
        return 1;
      case Kind::Mul:
      case Kind::Div:
        return (!is_const(n.children[0]) && !is_const(n.children[1])) ? 1 : 0;
      default:
        return 0;
    }
  });
  const long long total = std::max<long long>(1, terms + ops);
  return static_cast<int>(std::min<long long>(total, 1'000'000'000));
}

std::size_t node_count(const Expr& e) {
  std::size_t n = 1;
  for (const auto& c : e.children) n += node_count(*c);
  return n;
}

int depth(const Expr& e) {
  int d = 0;
  for (const auto& c : e.children) d = std::max(d, depth(*c));
  return d + 1;
}

int numeric_node_count(const Expr& e) {
  std::unordered_map<const Expr*, long long> memo;
  const long long n = fold_tree(e, memo, [](const Expr& x) -> long long { return x.kind == Kind::Numeric ? 1 : 0; });
  return static_cast<int>(std::min<long long>(n, 1'000'000'000));
}

ExprPtr substitute(const ExprPtr& e, const std::vector<ExprPtr>& replacement) {
  std::unordered_map<const Expr*, ExprPtr> memo;
  std::function<ExprPtr(const ExprPtr&)> go = [&](const ExprPtr& n) -> ExprPtr {
    if (auto it = memo.find(n.get()); it != memo.end()) return it->second;
    ExprPtr out;
    if (n->kind == Kind::Variable) {
      if (static_cast<std::size_t>(n->var) >= replacement.size()) throw ShapeError("substitute: missing variable");
      out = replacement[static_cast<std::size_t>(n->var)];
    } else if (n->children.empty()) {
      out = n;
    } else {
      auto copy = std::make_shared<Expr>(*n);
      for (auto& c : copy->children) c = go(c);
      out = copy;
    }
    memo.emplace(n.get(), out);
    return out;
  };
  return go(e);
}

// ---------------------------------------------------------------------------
// Infix

namespace {

class InfixWriter {
 public:
  explicit InfixWriter(const std::vector<std::string>& names) : names_(names) {}

  std::string write(const Expr& e) {
    switch (e.kind) {
      case Kind::Constant:
        return format_real(e.value);
      case Kind::Variable:
        return static_cast<std::size_t>(e.var) < names_.size() ? names_[static_cast<std::size_t>(e.var)]
                                                               : "x" + std::to_string(e.var + 1);
      case Kind::Apply: {
        const auto& p = e.affine;
        std::string inner = scaled(p.a, *e.children[0]);
        if (p.b != 0.0) inner += (p.b > 0 ? " + " : " - ") + format_real(std::abs(p.b));
        std::string core;
        const std::string& name = e.op->name;
        if (name == "x") core = "(" + inner + ")";
        else if (name == "x^2") core = "(" + inner + ")^2";
        else if (name == "1/x") core = "1/(" + inner + ")";
        else if (name == "1/sqrt(x)") core = "1/sqrt(" + inner + ")";
        else core = name + "(" + inner + ")";
        std::string out = p.c == 1.0 ? core : format_real(p.c) + "*" + core;
        if (p.d != 0.0) out += (p.d > 0 ? " + " : " - ") + format_real(std::abs(p.d));
        return out;
      }
      case Kind::Sum: {
        std::string out;
        for (std::size_t i = 0; i < e.children.size(); ++i) {
          const double k = e.coefs[i];
          const std::string t = scaled(std::abs(k), *e.children[i]);
          if (out.empty()) out = (k < 0 ? "-" : "") + t;
          else out += (k < 0 ? " - " : " + ") + t;
        }
        if (e.value != 0.0 || out.empty()) {
          if (out.empty()) out = format_real(e.value);
          else out += (e.value < 0 ? " - " : " + ") + format_real(std::abs(e.value));
        }
        return out;
      }
      case Kind::Add:
        return "(" + write(*e.children[0]) + " + " + write(*e.children[1]) + ")";
      case Kind::Sub:
        return "(" + write(*e.children[0]) + " - " + write(*e.children[1]) + ")";
      case Kind::Mul:
        return atom(*e.children[0]) + "*" + atom(*e.children[1]);
      case Kind::Div:
        return atom(*e.children[0]) + "/" + atom(*e.children[1]);
      case Kind::Numeric:
        return "spline(" + write(*e.children[0]) + ")";
    }
    return {};
  }

 private:
  std::string atom(const Expr& e) {
    const bool wrap = e.kind == Kind::Sum || (e.kind == Kind::Apply && e.affine.d != 0.0) ||
                      (e.kind == Kind::Constant && e.value < 0.0);
    return wrap ? "(" + write(e) + ")" : write(e);
  }
  std::string scaled(double k, const Expr& e) {
    if (k == 1.0) return atom(e);
    return format_real(k) + "*" + atom(e);
  }

  const std::vector<std::string>& names_;
};

}  // namespace

std::string to_infix(const Expr& e, const std::vector<std::string>& names) { return InfixWriter(names).write(e); }

// ---------------------------------------------------------------------------

std::optional<LinearForm> linear_form(const ExprPtr& e, int variables) {
  const auto n = static_cast<std::size_t>(variables);
  std::function<std::optional<LinearForm>(const Expr&)> go = [&](const Expr& x) -> std::optional<LinearForm> {
    LinearForm f;
    f.coefs.assign(n, 0.0);
    switch (x.kind) {
      case Kind::Constant:
        f.intercept = x.value;
        return f;
      case Kind::Variable:
        if (static_cast<std::size_t>(x.var) >= n) return std::nullopt;
        f.coefs[static_cast<std::size_t>(x.var)] = 1.0;
        return f;
      case Kind::Apply: {
        if (x.op->name != "x") return std::nullopt;
        auto c = go(*x.children[0]);
        if (!c) return std::nullopt;
        const auto& p = x.affine;
        for (std::size_t i = 0; i < n; ++i) f.coefs[i] = p.c * p.a * c->coefs[i];
        f.intercept = p.c * (p.a * c->intercept + p.b) + p.d;
        return f;
      }
      case Kind::Sum:
        f.intercept = x.value;
        for (std::size_t t = 0; t < x.children.size(); ++t) {
          auto c = go(*x.children[t]);
          if (!c) return std::nullopt;
          for (std::size_t i = 0; i < n; ++i) f.coefs[i] += x.coefs[t] * c->coefs[i];
          f.intercept += x.coefs[t] * c->intercept;
        }
        return f;
      case Kind::Add:
      case Kind::Sub: {
        auto l = go(*x.children[0]);
        auto r = go(*x.children[1]);
        if (!l || !r) return std::nullopt;
        const double s = x.kind == Kind::Add ? 1.0 : -1.0;
        for (std::size_t i = 0; i < n; ++i) f.coefs[i] = l->coefs[i] + s * r->coefs[i];
        f.intercept = l->intercept + s * r->intercept;
        return f;
      }
      default:
        return std::nullopt;
    }
  };
  return go(*simplify(e));
}

std::vector<double> SymbolicFormula::evaluate(const Dataset& data) const {
  std::vector<double> out(data.rows);
  for (std::size_t r = 0; r < data.rows; ++r) out[r] = kanheat::evaluate(*root, data.row(r));
  return out;
}

SymbolicFormula extract_formula(const KanNetwork& net) {
  SymbolicFormula f;
  f.variables = net.input_dim();
  std::vector<ExprPtr> cur;
  for (int i = 0; i < net.input_dim(); ++i) cur.push_back(make_variable(i));
  for (int l = 0; l < net.depth(); ++l) {
    const auto& layer = net.layer(l);
    std::vector<ExprPtr> next;
    for (int j = 0; j < layer.n_out; ++j) {
      std::vector<ExprPtr> terms;
      for (int i = 0; i < layer.n_in; ++i) {
        const SplineEdge& edge = layer.edge(i, j);
        if (edge.locked()) {
          terms.push_back(make_apply(*edge.lock->op, edge.lock->affine, cur[static_cast<std::size_t>(i)]));
        } else {
          SplineEdge copy = edge;
          terms.push_back(make_numeric(std::move(copy), cur[static_cast<std::size_t>(i)]));
          f.partial = true;
        }
      }
      std::vector<double> ones(terms.size(), 1.0);
      next.push_back(make_sum(std::move(terms), std::move(ones), layer.biases[static_cast<std::size_t>(j)]));
    }
    cur = std::move(next);
  }
  f.root = simplify(cur.front());
  return f;
}

SymbolicFormula denormalize(const SymbolicFormula& f, const NormalizationSpec& spec) {
  SymbolicFormula out = f;
  std::vector<ExprPtr> repl;
  for (int i = 0; i < f.variables; ++i) {
    const auto c = static_cast<std::size_t>(i);
    if (c < spec.input_scale.size()) {
      repl.push_back(make_sum({make_variable(i)}, {1.0 / spec.input_scale[c]}, -spec.input_shift[c] / spec.input_scale[c]));
    } else {
      repl.push_back(make_variable(i));
    }
  }
  ExprPtr body = substitute(f.root, repl);
  out.root = simplify(make_sum({body}, {spec.target_scale}, spec.target_shift));
  return out;
}

}  // namespace kanheat

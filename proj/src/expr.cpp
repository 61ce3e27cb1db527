#include "selfstab/expr.hpp"

#include <charconv>
#include <cctype>
#include <sstream>

namespace selfstab::expr {

SyntaxError::SyntaxError(std::size_t offset, std::vector<std::string> expected,
                         const std::string& message)
    : Error("syntax", message), offset_(offset), expected_(std::move(expected)) {}

EvalDomainError::EvalDomainError(std::string subexpression, const std::string& message)
    : Error("domain", message), subexpression_(std::move(subexpression)) {}

namespace {

struct FunctionInfo {
  std::string_view name;
  Op op;
  int arity;
};

constexpr FunctionInfo kFunctions[] = {
    {"exp", Op::kExp, 1},   {"log", Op::kLog, 1},  {"sin", Op::kSin, 1},
    {"cos", Op::kCos, 1},   {"sqrt", Op::kSqrt, 1}, {"abs", Op::kAbs, 1},
    {"min", Op::kMin, 2},   {"max", Op::kMax, 2},  {"smoothstep", Op::kSmoothstep, 3},
};

}  // namespace

double constant_subtree_value(const std::vector<Node>& nodes, int root);

namespace {

class Parser {
 public:
  Parser(std::string_view source, const std::vector<std::string>& variables)
      : src_(source), variables_(variables) {}

  int run() {
    const int root = parse_sum();
    skip_ws();
    if (pos_ != src_.size()) {
      fail(pos_, {"operator", "end of input"},
           "unexpected '" + std::string(1, src_[pos_]) + "'");
    }
    return root;
  }

  std::vector<Node> take_nodes() { return std::move(nodes_); }

 private:
  [[noreturn]] void fail(std::size_t at, std::vector<std::string> expected,
                         const std::string& what) const {
    std::ostringstream msg;
    msg << "syntax error at offset " << at << ": " << what;
    if (!expected.empty()) {
      msg << "; expected ";
      for (std::size_t i = 0; i < expected.size(); ++i) {
        msg << (i ? " or " : "") << '\'' << expected[i] << '\'';
      }
    }
    throw SyntaxError(at, std::move(expected), msg.str());
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      fail(pos_, {std::string(1, c)},
           pos_ < src_.size() ? "unexpected '" + std::string(1, src_[pos_]) + "'"
                              : "unexpected end of input");
    }
  }

  int add(Node node) {
    nodes_.push_back(node);
    return static_cast<int>(nodes_.size()) - 1;
  }

  int binary(Op op, int lhs, int rhs) {
    Node n;
    n.op = op;
    n.args = {lhs, rhs, -1};
    return add(n);
  }

  int parse_sum() {
    int lhs = parse_product();
    for (;;) {
      if (accept('+')) {
        lhs = binary(Op::kAdd, lhs, parse_product());
      } else if (accept('-')) {
        lhs = binary(Op::kSub, lhs, parse_product());
      } else {
        return lhs;
      }
    }
  }

  int parse_product() {
    int lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = binary(Op::kMul, lhs, parse_unary());
      } else if (accept('/')) {
        lhs = binary(Op::kDiv, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  int parse_unary() {
    if (accept('-')) {
      Node n;
      n.op = Op::kNeg;
      n.args[0] = parse_unary();
      return add(n);
    }
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  bool uses_variable(int node) const {
    const Node& n = nodes_[node];
    if (n.op == Op::kVar) return true;
    for (int a : n.args) {
      if (a >= 0 && uses_variable(a)) return true;
    }
    return false;
  }

  // Constant integral exponents take the repeated-product path so negative
  // bases stay legal.
  bool integer_exponent(int node, double& k) const {
    if (uses_variable(node)) return false;
    double value = 0.0;
    try {
      value = constant_subtree_value(nodes_, node);
    } catch (const Error&) {
      return false;
    }
    if (value != std::floor(value) || std::abs(value) > 64) return false;
    k = value;
    return true;
  }

  int parse_power() {
    const int base = parse_primary();
    if (!accept('^')) return base;
    const int exponent = parse_unary();
    double k = 0.0;
    Node n;
    if (integer_exponent(exponent, k)) {
      n.op = Op::kPowInt;
      n.args[0] = base;
      n.value = k;
    } else {
      n.op = Op::kPow;
      n.args = {base, exponent, -1};
    }
    return add(n);
  }

  int parse_number() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) ||
                                  src_[pos_] == '.')) {
      ++pos_;
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t probe = pos_ + 1;
      if (probe < src_.size() && (src_[probe] == '+' || src_[probe] == '-')) ++probe;
      if (probe < src_.size() && std::isdigit(static_cast<unsigned char>(src_[probe]))) {
        pos_ = probe;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      }
    }
    double value = 0.0;
    const auto [end, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, value);
    if (ec != std::errc() || end != src_.data() + pos_) {
      fail(start, {"number"}, "malformed number '" + std::string(src_.substr(start, pos_ - start)) +
                                  "'");
    }
    Node n;
    n.op = Op::kConst;
    n.value = value;
    return add(n);
  }

  int parse_primary() {
    skip_ws();
    if (pos_ >= src_.size()) fail(pos_, {"number", "identifier", "("}, "unexpected end of input");
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (accept('(')) {
      const int inner = parse_sum();
      expect(')');
      return inner;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
                                    src_[pos_] == '_')) {
        ++pos_;
      }
      const std::string_view name = src_.substr(start, pos_ - start);
      skip_ws();
      if (pos_ < src_.size() && src_[pos_] == '(') return parse_call(name, start);
      for (std::size_t i = 0; i < variables_.size(); ++i) {
        if (variables_[i] == name) {
          Node n;
          n.op = Op::kVar;
          n.var = static_cast<int>(i);
          return add(n);
        }
      }
      if (name == "pi") {
        Node n;
        n.op = Op::kConst;
        n.value = 3.141592653589793238462643383279502884;
        return add(n);
      }
      fail(start, variables_, "unknown identifier '" + std::string(name) + "'");
    }
    fail(pos_, {"number", "identifier", "("}, "unexpected '" + std::string(1, c) + "'");
  }

  int parse_call(std::string_view name, std::size_t at) {
    const FunctionInfo* info = nullptr;
    for (const auto& f : kFunctions) {
      if (f.name == name) info = &f;
    }
    if (info == nullptr) {
      std::vector<std::string> known;
      for (const auto& f : kFunctions) known.emplace_back(f.name);
      fail(at, known, "unknown function '" + std::string(name) + "'");
    }
    expect('(');
    std::vector<int> args;
    if (!accept(')')) {
      do {
        args.push_back(parse_sum());
      } while (accept(','));
      expect(')');
    }
    if (static_cast<int>(args.size()) != info->arity) {
      fail(at, {},
           "function '" + std::string(name) + "' takes " + std::to_string(info->arity) +
               " argument(s), got " + std::to_string(args.size()));
    }
    Node n;
    n.op = info->op;
    for (std::size_t i = 0; i < args.size(); ++i) n.args[i] = args[i];
    return add(n);
  }

  std::string_view src_;
  const std::vector<std::string>& variables_;
  std::size_t pos_ = 0;
  std::vector<Node> nodes_;
};

std::string format_number(double value) {
  char buffer[64];
  const auto [end, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  std::string text(buffer, end);
  if (value < 0) text = "(" + text + ")";
  return text;
}

template <class T>
T pow_int(const T& base, int k) {
  if (k < 0) return lift<T>(1.0) / pow_int(base, -k);
  T result = lift<T>(1.0);
  T factor = base;
  while (k > 0) {
    if (k & 1) result = result * factor;
    k >>= 1;
    if (k > 0) factor = factor * factor;
  }
  return result;
}

}  // namespace

double constant_subtree_value(const std::vector<Node>& nodes, int root) {
  Expression e;
  e.nodes_ = std::make_shared<const std::vector<Node>>(nodes);
  e.root_ = root;
  return e.evaluate<double>({});
}

Expression Expression::parse(std::string_view source, std::vector<std::string> variables) {
  Parser parser(source, variables);
  const int root = parser.run();
  Expression e;
  e.nodes_ = std::make_shared<const std::vector<Node>>(parser.take_nodes());
  e.root_ = root;
  e.variables_ = std::move(variables);
  e.source_ = std::string(source);
  return e;
}

namespace {

using Poly = std::vector<double>;

Poly poly_mul(const Poly& a, const Poly& b) {
  Poly r(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
  }
  return r;
}

Poly poly_add(Poly a, const Poly& b, double sign) {
  if (a.size() < b.size()) a.resize(b.size(), 0.0);
  for (std::size_t i = 0; i < b.size(); ++i) a[i] += sign * b[i];
  return a;
}

bool uses_var(const std::vector<Node>& nodes, int index) {
  const Node& n = nodes[index];
  if (n.op == Op::kVar) return true;
  for (int a : n.args) {
    if (a >= 0 && uses_var(nodes, a)) return true;
  }
  return false;
}

std::optional<Poly> to_poly(const std::vector<Node>& nodes, int index, int max_degree) {
  const Node& n = nodes[index];
  if (!uses_var(nodes, index)) {
    try {
      return Poly{constant_subtree_value(nodes, index)};
    } catch (const Error&) {
      return std::nullopt;
    }
  }
  std::optional<Poly> a, b;
  switch (n.op) {
    case Op::kVar:
      return Poly{0.0, 1.0};
    case Op::kNeg:
      if (!(a = to_poly(nodes, n.args[0], max_degree))) return std::nullopt;
      for (double& c : *a) c = -c;
      return a;
    case Op::kAdd:
    case Op::kSub:
      if (!(a = to_poly(nodes, n.args[0], max_degree)) || !(b = to_poly(nodes, n.args[1], max_degree))) {
        return std::nullopt;
      }
      return poly_add(*a, *b, n.op == Op::kAdd ? 1.0 : -1.0);
    case Op::kMul: {
      if (!(a = to_poly(nodes, n.args[0], max_degree)) || !(b = to_poly(nodes, n.args[1], max_degree))) {
        return std::nullopt;
      }
      if (static_cast<int>(a->size() + b->size()) - 2 > max_degree) return std::nullopt;
      return poly_mul(*a, *b);
    }
    case Op::kDiv:
      if (uses_var(nodes, n.args[1])) return std::nullopt;
      if (!(a = to_poly(nodes, n.args[0], max_degree)) || !(b = to_poly(nodes, n.args[1], max_degree))) {
        return std::nullopt;
      }
      if ((*b)[0] == 0.0) return std::nullopt;
      for (double& c : *a) c /= (*b)[0];
      return a;
    case Op::kPowInt: {
      const int k = static_cast<int>(n.value);
      if (k < 0) return std::nullopt;
      if (!(a = to_poly(nodes, n.args[0], max_degree))) return std::nullopt;
      if (static_cast<long>(a->size() - 1) * k > max_degree) return std::nullopt;
      Poly r{1.0};
      for (int i = 0; i < k; ++i) r = poly_mul(r, *a);
      return r;
    }
    default:
      return std::nullopt;
  }
}

}  // namespace

std::optional<std::vector<double>> Expression::polynomial_coefficients(int max_degree) const {
  if (empty() || variables_.size() != 1) return std::nullopt;
  auto p = to_poly(*nodes_, root_, max_degree);
  if (p) {
    while (p->size() > 1 && p->back() == 0.0) p->pop_back();
  }
  return p;
}

bool Expression::is_constant() const {
  if (!nodes_) return true;
  for (const Node& n : *nodes_) {
    if (n.op == Op::kVar) return false;
  }
  return true;
}

double Expression::operator()(const Vec& x) const {
  std::array<double, kMaxDim> values{};
  for (Eigen::Index i = 0; i < x.size(); ++i) values[i] = x(i);
  return evaluate<double>(std::span<const double>(values.data(), static_cast<std::size_t>(x.size())));
}

std::string Expression::render() const { return nodes_ ? render_node(root_) : std::string(); }

std::string Expression::render_node(int index) const {
  const Node& n = (*nodes_)[index];
  auto arg = [&](int i) { return render_node(n.args[i]); };
  switch (n.op) {
    case Op::kConst:
      return format_number(n.value);
    case Op::kVar:
      return variables_[n.var];
    case Op::kAdd:
      return "(" + arg(0) + " + " + arg(1) + ")";
    case Op::kSub:
      return "(" + arg(0) + " - " + arg(1) + ")";
    case Op::kMul:
      return "(" + arg(0) + " * " + arg(1) + ")";
    case Op::kDiv:
      return "(" + arg(0) + " / " + arg(1) + ")";
    case Op::kPow:
      return "(" + arg(0) + " ^ " + arg(1) + ")";
    case Op::kPowInt:
      return "(" + arg(0) + " ^ " + format_number(n.value) + ")";
    case Op::kNeg:
      return "(-" + arg(0) + ")";
    case Op::kExp:
      return "exp(" + arg(0) + ")";
    case Op::kLog:
      return "log(" + arg(0) + ")";
    case Op::kSin:
      return "sin(" + arg(0) + ")";
    case Op::kCos:
      return "cos(" + arg(0) + ")";
    case Op::kSqrt:
      return "sqrt(" + arg(0) + ")";
    case Op::kAbs:
      return "abs(" + arg(0) + ")";
    case Op::kMin:
      return "min(" + arg(0) + ", " + arg(1) + ")";
    case Op::kMax:
      return "max(" + arg(0) + ", " + arg(1) + ")";
    case Op::kSmoothstep:
      return "smoothstep(" + arg(0) + ", " + arg(1) + ", " + arg(2) + ")";
  }
  return {};
}

template <class T>
T Expression::evaluate(std::span<const T> values) const {
  if (!nodes_) throw PreconditionError("evaluating an empty expression");
  if (values.size() < variables_.size()) {
    throw PreconditionError("expression expects " + std::to_string(variables_.size()) +
                            " variable(s), got " + std::to_string(values.size()));
  }
  return eval_node<T>(root_, values);
}

template <class T>
T Expression::eval_node(int index, std::span<const T> values) const {
  using std::cos;
  using std::exp;
  using std::log;
  using std::sin;
  using std::sqrt;
  const Node& n = (*nodes_)[index];
  auto arg = [&](int i) { return eval_node<T>(n.args[i], values); };
  auto domain_error = [&](const std::string& what) {
    const std::string sub = render_node(index);
    return EvalDomainError(sub, what + " in " + sub);
  };
  switch (n.op) {
    case Op::kConst:
      return lift<T>(n.value);
    case Op::kVar:
      return values[n.var];
    case Op::kAdd:
      return arg(0) + arg(1);
    case Op::kSub:
      return arg(0) - arg(1);
    case Op::kMul:
      return arg(0) * arg(1);
    case Op::kDiv: {
      const T den = arg(1);
      if (primal(den) == 0.0) throw domain_error("division by zero");
      return arg(0) / den;
    }
    case Op::kPowInt: {
      const T base = arg(0);
      if (n.value < 0 && primal(base) == 0.0) throw domain_error("zero raised to a negative power");
      return pow_int(base, static_cast<int>(n.value));
    }
    case Op::kPow: {
      const T base = arg(0);
      if (primal(base) <= 0.0) throw domain_error("non-integer power of a non-positive base");
      return exp(arg(1) * log(base));
    }
    case Op::kNeg:
      return -arg(0);
    case Op::kExp:
      return exp(arg(0));
    case Op::kLog: {
      const T x = arg(0);
      if (primal(x) <= 0.0) throw domain_error("log of a non-positive number");
      return log(x);
    }
    case Op::kSin:
      return sin(arg(0));
    case Op::kCos:
      return cos(arg(0));
    case Op::kSqrt: {
      const T x = arg(0);
      if (primal(x) < 0.0) throw domain_error("sqrt of a negative number");
      return sqrt(x);
    }
    case Op::kAbs: {
      const T x = arg(0);
      if (primal(x) > 0.0) return x;
      if (primal(x) < 0.0) return -x;
      return lift<T>(0.0);  // subgradient 0 at the kink
    }
    case Op::kMin: {
      const T a = arg(0);
      const T b = arg(1);
      return primal(b) < primal(a) ? b : a;
    }
    case Op::kMax: {
      const T a = arg(0);
      const T b = arg(1);
      return primal(b) > primal(a) ? b : a;
    }
    case Op::kSmoothstep: {
      const T lo = arg(0);
      const T hi = arg(1);
      if (primal(hi) == primal(lo)) throw domain_error("smoothstep with equal edges");
      const T t = (arg(2) - lo) / (hi - lo);
      if (primal(t) <= 0.0) return lift<T>(0.0);
      if (primal(t) >= 1.0) return lift<T>(1.0);
      return t * t * (lift<T>(3.0) - 2.0 * t);
    }
  }
  throw PreconditionError("corrupt expression node");
}

template double Expression::evaluate<double>(std::span<const double>) const;
template Jet<double> Expression::evaluate<Jet<double>>(std::span<const Jet<double>>) const;
template Jet<Jet<double>> Expression::evaluate<Jet<Jet<double>>>(
    std::span<const Jet<Jet<double>>>) const;

Expression parse(std::string_view source, int dim) {
  if (dim < 1 || dim > kMaxDim) {
    throw PreconditionError("dimension must be in [1, " + std::to_string(kMaxDim) + "]");
  }
  std::vector<std::string> names;
  for (int i = 1; i <= dim; ++i) names.push_back("x" + std::to_string(i));
  return Expression::parse(source, std::move(names));
}

Expression parse_profile(std::string_view source) { return Expression::parse(source, {"u"}); }

double eval_gradient(const Expression& e, const Vec& x, Vec& gradient) {
  const int dim = static_cast<int>(x.size());
  std::array<Jet<double>, kMaxDim> seeds{};
  for (int i = 0; i < dim; ++i) {
    seeds[i].v = x(i);
    seeds[i].d[i] = 1.0;
    seeds[i].n = dim;
  }
  const Jet<double> r =
      e.evaluate<Jet<double>>(std::span<const Jet<double>>(seeds.data(), static_cast<std::size_t>(dim)));
  gradient.resize(dim);
  for (int i = 0; i < dim; ++i) gradient(i) = r.d[i];
  return r.v;
}

DualVector eval_gradient(const Expression& e, const Vec& x) {
  Vec g;
  DualVector out;
  out.value = eval_gradient(e, x, g);
  out.partials.assign(g.data(), g.data() + g.size());
  return out;
}

double eval_jacobian_action(const Expression& e, const Vec& x, const Vec& h) {
  if (h.size() != x.size()) throw PreconditionError("direction and point differ in dimension");
  if (std::abs(h.norm() - 1.0) > 1e-9) throw PreconditionError("direction must be a unit vector");
  const int dim = static_cast<int>(x.size());
  using J2 = Jet<Jet<double>>;
  std::array<J2, kMaxDim> seeds{};
  for (int i = 0; i < dim; ++i) {
    seeds[i].v.v = x(i);
    seeds[i].v.d[0] = h(i);
    seeds[i].v.n = 1;
    seeds[i].d[0].v = h(i);
    seeds[i].n = 1;
  }
  const J2 r = e.evaluate<J2>(std::span<const J2>(seeds.data(), static_cast<std::size_t>(dim)));
  return r.d[0].d[0];
}

Mat eval_hessian(const Expression& e, const Vec& x) {
  const int dim = static_cast<int>(x.size());
  using J2 = Jet<Jet<double>>;
  std::array<J2, kMaxDim> seeds{};
  for (int i = 0; i < dim; ++i) {
    seeds[i].v.v = x(i);
    seeds[i].v.d[i] = 1.0;
    seeds[i].v.n = dim;
    seeds[i].d[i].v = 1.0;
    seeds[i].n = dim;
  }
  const J2 r = e.evaluate<J2>(std::span<const J2>(seeds.data(), static_cast<std::size_t>(dim)));
  Mat hessian(dim, dim);
  for (int j = 0; j < dim; ++j) {
    for (int k = 0; k < dim; ++k) hessian(j, k) = r.d[j].d[k];
  }
  return hessian;
}

double eval_derivative(const Expression& e, double u) {
  Jet<double> seed;
  seed.v = u;
  seed.d[0] = 1.0;
  seed.n = 1;
  return e.evaluate<Jet<double>>(std::span<const Jet<double>>(&seed, 1)).d[0];
}

}  // namespace selfstab::expr

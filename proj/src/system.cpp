#include "avgtori/system.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "avgtori/errors.hpp"

namespace avgtori {

SystemSpec::SystemSpec(std::string name, int dim, double period, int order,
                       std::vector<std::vector<Expr>> components, std::vector<Expr> remainder)
    : name_(std::move(name)),
      dim_(dim),
      period_(period),
      order_(order),
      components_(std::move(components)),
      remainder_(std::move(remainder)) {
  if (dim_ < 1) throw std::invalid_argument("system dimension must be positive");
  if (!(period_ > 0.0) || !std::isfinite(period_))
    throw std::invalid_argument("system period must be positive");
  if (order_ < 1) throw std::invalid_argument("truncation order must be at least 1");
  if (static_cast<int>(components_.size()) != order_)
    throw std::invalid_argument("expected one component list per order");
  for (const auto& comp : components_) {
    if (static_cast<int>(comp.size()) != dim_)
      throw std::invalid_argument("each order needs exactly n components");
    for (const auto& e : comp)
      if (max_variable(e) > dim_) throw std::invalid_argument("component references x_k with k > n");
  }
  if (!remainder_.empty() && static_cast<int>(remainder_.size()) != dim_)
    throw std::invalid_argument("remainder needs exactly n components");

  for (const auto& comp : components_) {
    std::vector<CompiledExpr> c;
    for (const auto& e : comp) c.emplace_back(e);
    compiled_.push_back(std::move(c));
  }
  for (const auto& e : remainder_) remainder_compiled_.emplace_back(e);

  // Partial derivatives of every order up to N, indexed by sorted multisets.
  partials_.resize(static_cast<std::size_t>(order_));
  for (int i = 1; i <= order_; ++i) {
    auto& table = partials_[static_cast<std::size_t>(i - 1)];
    std::vector<std::vector<int>> frontier{{}};
    std::map<std::vector<int>, std::vector<Expr>> exprs;
    exprs[{}] = components_[static_cast<std::size_t>(i - 1)];
    for (int m = 1; m <= order_; ++m) {
      std::vector<std::vector<int>> next;
      for (const auto& key : frontier) {
        const int first = key.empty() ? 1 : key.back();
        for (int v = first; v <= dim_; ++v) {
          auto k2 = key;
          k2.push_back(v);
          std::vector<Expr> d;
          for (const auto& e : exprs[key]) d.push_back(diff_expr(e, v));
          Partial p;
          p.exprs = d;
          for (const auto& e : d) p.compiled.emplace_back(e);
          table.emplace(k2, std::move(p));
          exprs[k2] = std::move(d);
          next.push_back(std::move(k2));
        }
      }
      frontier = std::move(next);
    }
  }
}

const Expr& SystemSpec::component(int i, int c) const {
  if (i < 1 || i > order_ || c < 0 || c >= dim_) throw std::out_of_range("component index");
  return components_[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(c)];
}

const Expr& SystemSpec::remainder(int c) const {
  if (remainder_.empty() || c < 0 || c >= dim_) throw std::out_of_range("remainder index");
  return remainder_[static_cast<std::size_t>(c)];
}

bool SystemSpec::order_is_zero(int i) const {
  if (i < 1 || i > order_) throw std::out_of_range("order index");
  for (const auto& e : components_[static_cast<std::size_t>(i - 1)])
    if (!e.is_zero()) return false;
  return true;
}

Eigen::VectorXd SystemSpec::eval_order(int i, double t, const Eigen::VectorXd& x) const {
  if (i < 1 || i > order_) throw std::out_of_range("order index");
  if (x.size() != dim_) throw std::invalid_argument("state dimension mismatch");
  Eigen::VectorXd out(dim_);
  const auto& c = compiled_[static_cast<std::size_t>(i - 1)];
  for (int k = 0; k < dim_; ++k) out[k] = c[static_cast<std::size_t>(k)](t, x.data());
  return out;
}

void SystemSpec::field(double eps, double t, const double* x, double* out) const {
  for (int k = 0; k < dim_; ++k) out[k] = 0.0;
  // Horner in eps: ((F_N eps + F_{N-1}) eps + ...) eps
  if (!remainder_.empty())
    for (int k = 0; k < dim_; ++k) out[k] = remainder_compiled_[static_cast<std::size_t>(k)](t, x);
  for (int i = order_; i >= 1; --i) {
    const auto& c = compiled_[static_cast<std::size_t>(i - 1)];
    for (int k = 0; k < dim_; ++k) out[k] = (out[k] * eps + c[static_cast<std::size_t>(k)](t, x));
  }
  for (int k = 0; k < dim_; ++k) out[k] *= eps;
}

Eigen::VectorXd SystemSpec::field(double eps, double t, const Eigen::VectorXd& x) const {
  if (x.size() != dim_) throw std::invalid_argument("state dimension mismatch");
  Eigen::VectorXd out(dim_);
  field(eps, t, x.data(), out.data());
  return out;
}

const SystemSpec::Partial& SystemSpec::partial(int i, const std::vector<int>& vars) const {
  return partials_[static_cast<std::size_t>(i - 1)].at(vars);
}

Eigen::MatrixXd SystemSpec::field_jacobian(double eps, double t, const Eigen::VectorXd& x) const {
  if (x.size() != dim_) throw std::invalid_argument("state dimension mismatch");
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(dim_, dim_);
  double scale = eps;
  for (int i = 1; i <= order_; ++i, scale *= eps) {
    if (order_is_zero(i)) continue;
    for (int v = 1; v <= dim_; ++v) {
      const auto& p = partial(i, {v});
      for (int k = 0; k < dim_; ++k) J(k, v - 1) += scale * p.compiled[static_cast<std::size_t>(k)](t, x.data());
    }
  }
  if (!remainder_.empty()) {
    // remainder Jacobian by symbolic differentiation on demand
    for (int v = 1; v <= dim_; ++v)
      for (int k = 0; k < dim_; ++k) {
        const Expr d = diff_expr(remainder_[static_cast<std::size_t>(k)], v);
        J(k, v - 1) += scale * eval_expr(d, t, std::span<const double>(x.data(), static_cast<std::size_t>(dim_)));
      }
  }
  return J;
}

Eigen::VectorXd SystemSpec::derivative_tensor(int i, int m, double t, const Eigen::VectorXd& x,
                                              std::span<const Eigen::VectorXd> dirs) const {
  if (i < 1 || i > order_) throw std::out_of_range("derivative_tensor: order index out of range");
  if (m < 1 || m > order_)
    throw std::out_of_range("derivative_tensor: derivative order exceeds the supported cap N");
  if (static_cast<int>(dirs.size()) != m)
    throw std::invalid_argument("derivative_tensor: need exactly m direction vectors");
  if (x.size() != dim_) throw std::invalid_argument("state dimension mismatch");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dim_);
  if (order_is_zero(i)) return out;

  // Sum over ordered index tuples; each tuple maps to a symmetric partial.
  std::vector<int> tuple(static_cast<std::size_t>(m), 1);
  std::map<std::vector<int>, Eigen::VectorXd> cache;
  for (;;) {
    double weight = 1.0;
    for (int l = 0; l < m; ++l) weight *= dirs[static_cast<std::size_t>(l)][tuple[static_cast<std::size_t>(l)] - 1];
    if (weight != 0.0) {
      auto key = tuple;
      std::sort(key.begin(), key.end());
      auto it = cache.find(key);
      if (it == cache.end()) {
        const auto& p = partial(i, key);
        Eigen::VectorXd v(dim_);
        for (int k = 0; k < dim_; ++k) v[k] = p.compiled[static_cast<std::size_t>(k)](t, x.data());
        it = cache.emplace(std::move(key), std::move(v)).first;
      }
      out += weight * it->second;
    }
    int l = m - 1;
    while (l >= 0 && tuple[static_cast<std::size_t>(l)] == dim_) tuple[static_cast<std::size_t>(l--)] = 1;
    if (l < 0) break;
    ++tuple[static_cast<std::size_t>(l)];
  }
  return out;
}

std::vector<Series> SystemSpec::eval_order_series(int i, const Series& t, std::span<const Series> x) const {
  if (i < 1 || i > order_) throw std::out_of_range("order index");
  std::vector<Series> out;
  out.reserve(static_cast<std::size_t>(dim_));
  for (const auto& e : components_[static_cast<std::size_t>(i - 1)]) {
    if (e.is_zero())
      out.emplace_back(0.0, t.order());
    else
      out.push_back(evaluate<Series>(e, t, x));
  }
  return out;
}

double SystemSpec::periodicity_defect(int samples, double box) const {
  std::mt19937_64 rng(0x5eedULL);
  std::uniform_real_distribution<double> ut(0.0, period_), ux(-box, box);
  double worst = 0.0;
  Eigen::VectorXd x(dim_);
  for (int s = 0; s < samples; ++s) {
    const double t = ut(rng);
    for (int k = 0; k < dim_; ++k) x[k] = ux(rng);
    auto check = [&](const std::vector<CompiledExpr>& comp) {
      for (const auto& c : comp) {
        const double a = c(t, x.data()), b = c(t + period_, x.data());
        if (!std::isfinite(a) || !std::isfinite(b)) continue;
        worst = std::max(worst, std::abs(a - b) / std::max(1.0, std::abs(a)));
      }
    };
    for (const auto& comp : compiled_) check(comp);
    if (!remainder_compiled_.empty()) check(remainder_compiled_);
  }
  return worst;
}

std::string SystemSpec::to_json_text() const {
  nlohmann::ordered_json j;
  j["name"] = name_;
  j["n"] = dim_;
  j["T"] = period_;
  j["N"] = order_;
  nlohmann::ordered_json f = nlohmann::ordered_json::object();
  for (int i = 1; i <= order_; ++i) {
    if (order_is_zero(i)) continue;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& e : components_[static_cast<std::size_t>(i - 1)]) arr.push_back(to_string(e));
    f[std::to_string(i)] = arr;
  }
  j["F"] = f;
  if (!remainder_.empty()) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& e : remainder_) arr.push_back(to_string(e));
    j["remainder"] = arr;
  }
  return j.dump();
}

namespace {

double constant_value(const nlohmann::json& v, const char* key) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const Expr e = parse_expr(v.get<std::string>(), 0);
    if (max_variable(e) > 0) throw ParseError(std::string("'") + key + "' must be constant", 0);
    if (diff_expr(e, 0) != Expr::literal(0.0)) throw ParseError(std::string("'") + key + "' must not depend on t", 0);
    return eval_expr(e, 0.0, {});
  }
  throw ParseError(std::string("'") + key + "' must be a number or expression string", 0);
}

std::vector<Expr> parse_components(const nlohmann::json& arr, int n, const std::string& where) {
  if (!arr.is_array() || static_cast<int>(arr.size()) != n)
    throw ParseError(where + ": expected an array of " + std::to_string(n) + " expression strings", 0);
  std::vector<Expr> out;
  for (const auto& s : arr) {
    if (!s.is_string()) throw ParseError(where + ": components must be strings", 0);
    try {
      out.push_back(parse_expr(s.get<std::string>(), n));
    } catch (const ParseError& e) {
      throw ParseError(where + ": " + e.what(), e.offset());
    }
  }
  return out;
}

}  // namespace

SystemSpec parse_system(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed system file: ") + e.what(), e.byte);
  }
  if (!j.is_object()) throw ParseError("system file must hold a JSON object", 0);
  for (const auto& [key, value] : j.items())
    if (key != "name" && key != "n" && key != "T" && key != "N" && key != "F" && key != "remainder")
      throw ParseError("unknown key '" + key + "'", 0);
  for (const char* key : {"n", "T", "N", "F"})
    if (!j.contains(key)) throw ParseError(std::string("missing key '") + key + "'", 0);
  if (!j["n"].is_number_integer() || !j["N"].is_number_integer())
    throw ParseError("'n' and 'N' must be integers", 0);
  const int n = j["n"].get<int>();
  const int order = j["N"].get<int>();
  if (n < 1) throw ParseError("'n' must be positive", 0);
  if (order < 1 || order > 8) throw ParseError("'N' must lie in [1, 8]", 0);
  const double period = constant_value(j["T"], "T");
  if (!(period > 0.0)) throw ParseError("'T' must be positive", 0);
  if (!j["F"].is_object()) throw ParseError("'F' must map orders to component lists", 0);

  std::vector<std::vector<Expr>> comps(static_cast<std::size_t>(order),
                                       std::vector<Expr>(static_cast<std::size_t>(n), Expr::literal(0.0)));
  for (const auto& [key, value] : j["F"].items()) {
    int i = 0;
    try {
      std::size_t used = 0;
      i = std::stoi(key, &used);
      if (used != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw ParseError("order key '" + key + "' is not an integer", 0);
    }
    if (i < 1 || i > order) throw ParseError("order " + key + " outside 1..N", 0);
    comps[static_cast<std::size_t>(i - 1)] = parse_components(value, n, "F." + key);
  }
  std::vector<Expr> rem;
  if (j.contains("remainder")) rem = parse_components(j["remainder"], n, "remainder");
  const std::string name = j.contains("name") && j["name"].is_string() ? j["name"].get<std::string>() : "system";
  return SystemSpec(name, n, period, order, std::move(comps), std::move(rem));
}

SystemSpec load_system(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open system file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  SystemSpec spec = parse_system(ss.str());
  verify_periodicity(spec);
  return spec;
}

void verify_periodicity(const SystemSpec& spec, double tol) {
  const double d = spec.periodicity_defect();
  if (d > tol)
    throw ValidityError("system components are not T-periodic in t (defect " + std::to_string(d) + ")");
}

}  // namespace avgtori

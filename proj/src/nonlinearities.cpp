#include "filmflow/nonlinearities.hpp"

#include <cmath>
#include <sstream>

#include "filmflow/errors.hpp"
#include "filmflow/quadrature.hpp"

namespace filmflow {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n\"");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n\"");
  return s.substr(first, last - first + 1);
}

// Parses "name(a,b,...)" into its numeric arguments.
std::vector<double> call_args(const std::string& text, const std::string& name) {
  const std::string t = trim(text);
  if (t.rfind(name + "(", 0) != 0 || t.back() != ')') {
    throw ValidationError(name, "expected " + name + "(...) but got '" + text + "'");
  }
  std::vector<double> out;
  std::stringstream ss(t.substr(name.size() + 1, t.size() - name.size() - 2));
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(trim(item)));
    } catch (const std::exception&) {
      throw ValidationError(name, "non-numeric argument '" + item + "'");
    }
  }
  return out;
}

std::string fmt_num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// C^1 smoothstep: 0 below r0/2, 1 above r0.
double ramp(double r, double r0) {
  const double lo = 0.5 * r0;
  if (r <= lo) return 0.0;
  if (r >= r0) return 1.0;
  const double t = (r - lo) / (r0 - lo);
  return t * t * (3.0 - 2.0 * t);
}

double ramp_prime(double r, double r0) {
  const double lo = 0.5 * r0;
  if (r <= lo || r >= r0) return 0.0;
  const double t = (r - lo) / (r0 - lo);
  return 6.0 * t * (1.0 - t) / (r0 - lo);
}

void require_positive(double r, const char* what) {
  if (!(r > 0.0)) {
    throw DomainError(std::string(what) + " requires r > 0, got " + fmt_num(r));
  }
}

}  // namespace

// --- GammaSpec / ForcingSpec ----------------------------------------------

std::string GammaSpec::to_string() const {
  if (kind == Kind::zero) return "zero";
  return "physical(" + fmt_num(A) + "," + fmt_num(B) + "," + fmt_num(k) + "," +
         fmt_num(r0) + ")";
}

GammaSpec GammaSpec::parse(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty() || t == "zero" || t == "0") return zero();
  const auto args = call_args(t, "physical");
  if (args.size() != 3 && args.size() != 4) {
    throw ValidationError("gamma", "physical(A,B,k[,r0]) takes 3 or 4 arguments");
  }
  return physical(args[0], args[1], args[2], args.size() == 4 ? args[3] : 0.1);
}

bool ForcingSpec::is_zero() const {
  switch (kind) {
    case Kind::constant:
      return value == 0.0;
    case Kind::cosine:
      return value == 0.0 && amplitude == 0.0;
    case Kind::sampled:
      for (double v : samples) {
        if (v != 0.0) return false;
      }
      return true;
  }
  return false;
}

std::string ForcingSpec::to_string() const {
  switch (kind) {
    case Kind::constant:
      return fmt_num(value);
    case Kind::cosine:
      return "cosine(" + fmt_num(value) + "," + fmt_num(amplitude) + ")";
    case Kind::sampled:
      return "sampled";
  }
  return {};
}

ForcingSpec ForcingSpec::parse(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) return constant(0.0);
  if (t.rfind("cosine", 0) == 0) {
    const auto args = call_args(t, "cosine");
    if (args.size() != 2) throw ValidationError("g", "cosine(mean,amplitude) takes 2 arguments");
    return cosine(args[0], args[1]);
  }
  try {
    std::size_t used = 0;
    const double v = std::stod(t, &used);
    if (used != t.size()) throw std::invalid_argument(t);
    return constant(v);
  } catch (const std::exception&) {
    throw ValidationError("g", "expected a number or cosine(mean,amplitude), got '" + text + "'");
  }
}

void ModelParams::validate(int dim) const {
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(s) || !finite(n) || !finite(beta) || !finite(kappa) || !finite(delta) ||
      !finite(a) || !finite(eps)) {
    throw ValidationError("model", "all coefficients must be finite");
  }
  if (n < 0.0 || n > s) throw ValidationError("n", "mobility exponents must satisfy 0 <= n <= s");
  if (dim == 3 && s >= 10.0) throw ValidationError("s", "s < 10 is required in three dimensions");
  if (beta < 0.0) throw ValidationError("beta", "beta >= 0 required");
  if (kappa <= 1.0) throw ValidationError("kappa", "kappa > 1 required");
  if (kappa < s + 1.0) {
    throw ValidationError("kappa", "the singularity must dominate the degeneracy: kappa >= s + 1");
  }
  if (delta < 0.0) throw ValidationError("delta", "delta >= 0 required");
  if (!(eps > 0.0) || eps > 1.0) throw ValidationError("eps", "eps must lie in (0, 1]");
  if (!(a > 0.0)) throw ValidationError("a", "a > 0 required");
  if (a * s / 2.0 > kappa - 1.0) {
    throw ValidationError("a", "regularization exponent must satisfy a*s/2 <= kappa - 1");
  }
  if (gamma.kind == GammaSpec::Kind::physical) {
    if (!(gamma.k > 1.0)) throw ValidationError("gamma", "tail exponent k > 1 keeps gamma integrable");
    if (!(gamma.r0 > 0.0)) throw ValidationError("gamma", "cut-off r0 > 0 required");
    if (gamma.A < 0.0) throw ValidationError("gamma", "damping A >= 0 required");
    if (!finite(gamma.B)) throw ValidationError("gamma", "B must be finite");
  }
  if (g.kind == ForcingSpec::Kind::sampled) {
    for (double v : g.samples) {
      if (!finite(v)) throw ValidationError("g", "sampled forcing must be finite");
    }
  }
}

// --- mobility -------------------------------------------------------------

double eval_b(const ModelParams& p, double r) {
  if (r < 0.0) throw DomainError("b(r) requires r >= 0, got " + fmt_num(r));
  double out = std::pow(r, p.s);
  if (p.beta != 0.0) out += p.beta * std::pow(r, p.n);
  return out;
}

double eval_b_prime(const ModelParams& p, double r) {
  require_positive(r, "b'(r)");
  double out = p.s == 0.0 ? 0.0 : p.s * std::pow(r, p.s - 1.0);
  if (p.beta != 0.0 && p.n != 0.0) out += p.beta * p.n * std::pow(r, p.n - 1.0);
  return out;
}

double eval_b_eps(const ModelParams& p, double r) {
  return eval_b(p, std::sqrt(r * r + std::pow(p.eps, p.a)));
}

double eval_b_eps_prime(const ModelParams& p, double r) {
  const double rho = std::sqrt(r * r + std::pow(p.eps, p.a));
  return eval_b_prime(p, rho) * r / rho;
}

// --- singular potential ---------------------------------------------------

double eval_f(const ModelParams& p, double r) {
  require_positive(r, "f(r)");
  return -std::pow(r, -p.kappa);
}

double eval_f_prime(const ModelParams& p, double r) {
  require_positive(r, "f'(r)");
  return p.kappa * std::pow(r, -p.kappa - 1.0);
}

double eval_f_eps(const ModelParams& p, double r) {
  if (r >= p.eps) return eval_f(p, r);
  return eval_f(p, p.eps) + eval_f_prime(p, p.eps) * (r - p.eps);
}

double eval_f_eps_prime(const ModelParams& p, double r) {
  return eval_f_prime(p, r >= p.eps ? r : p.eps);
}

double eval_F(const ModelParams& p, double r) {
  require_positive(r, "F(r)");
  // kappa = 1 is excluded by validate(); the logarithmic antiderivative keeps
  // the function defined if it is reached anyway.
  if (p.kappa == 1.0) return -std::log(r);
  return std::pow(r, 1.0 - p.kappa) / (p.kappa - 1.0);
}

double eval_F_eps(const ModelParams& p, double r) {
  if (r >= p.eps) return eval_F(p, r);
  const double d = r - p.eps;
  return eval_F(p, p.eps) + eval_f(p, p.eps) * d + 0.5 * eval_f_prime(p, p.eps) * d * d;
}

// --- entropy pair ---------------------------------------------------------

EntropyPair eval_entropy_pair(const ModelParams& p, double r) {
  require_positive(r, "entropy pair");
  if (p.beta == 0.0) {
    const double s = p.s;
    if (s == 1.0) return {std::log(r), r * std::log(r) - r + 1.0};
    if (s == 2.0) return {1.0 - 1.0 / r, r - 1.0 - std::log(r)};
    const double m = (std::pow(r, 1.0 - s) - 1.0) / (1.0 - s);
    const double M = ((std::pow(r, 2.0 - s) - 1.0) / (2.0 - s) - (r - 1.0)) / (1.0 - s);
    return {m, M};
  }
  const double m = quadrature::integrate([&p](double t) { return 1.0 / eval_b(p, t); }, 1.0, r);
  // M(r) = int_1^r (r - t) / b(t) dt, the single-integral form of int_1^r m.
  const double M =
      quadrature::integrate([&p, r](double t) { return (r - t) / eval_b(p, t); }, 1.0, r);
  return {m, M};
}

EntropyPair eval_entropy_pair_eps(const ModelParams& p, double r) {
  if (p.beta == 0.0 && p.s == 1.0) {
    // b_eps(t) = sqrt(t^2 + c): elementary antiderivatives.
    const double root_c = std::sqrt(std::pow(p.eps, p.a));
    const double base = std::asinh(1.0 / root_c);
    const double m = std::asinh(r / root_c) - base;
    auto prim = [root_c](double t) {
      return t * std::asinh(t / root_c) - std::sqrt(t * t + root_c * root_c);
    };
    return {m, prim(r) - prim(1.0) - (r - 1.0) * base};
  }
  const double m = quadrature::integrate([&p](double t) { return 1.0 / eval_b_eps(p, t); }, 1.0, r);
  const double M =
      quadrature::integrate([&p, r](double t) { return (r - t) / eval_b_eps(p, t); }, 1.0, r);
  return {m, M};
}

// --- perturbation ---------------------------------------------------------

double eval_gamma(const ModelParams& p, double r) {
  const GammaSpec& g = p.gamma;
  if (g.kind == GammaSpec::Kind::zero) return 0.0;
  const double chi = ramp(r, g.r0);
  if (chi == 0.0) return 0.0;
  return chi * g.B * std::pow(r, -g.k) * std::exp(-g.A * r);
}

double eval_gamma_prime(const ModelParams& p, double r) {
  const GammaSpec& g = p.gamma;
  if (g.kind == GammaSpec::Kind::zero || r <= 0.5 * g.r0) return 0.0;
  const double tail = g.B * std::pow(r, -g.k) * std::exp(-g.A * r);
  const double tail_prime = tail * (-g.k / r - g.A);
  return ramp_prime(r, g.r0) * tail + ramp(r, g.r0) * tail_prime;
}

double eval_Gamma(const ModelParams& p, double r) {
  const GammaSpec& g = p.gamma;
  if (g.kind == GammaSpec::Kind::zero) return 0.0;
  const double support = 0.5 * g.r0;
  const double lower = r < support ? support : r;
  return quadrature::integrate_piecewise([&p](double t) { return eval_gamma(p, t); }, 1.0,
                                         lower, {support, g.r0});
}

double eval_W(const ModelParams& p, double r) {
  require_positive(r, "W(r)");
  return eval_F(p, r) + eval_Gamma(p, r);
}

}  // namespace filmflow

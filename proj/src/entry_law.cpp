#include "sepcov/entry_law.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "sepcov/errors.hpp"

namespace sepcov {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;

double phi(double s) { return kInvSqrt2Pi * std::exp(-0.5 * s * s); }
double gauss_tail(double s) { return std::erfc(s / std::numbers::sqrt2); }

// Solves 4 log s + p log log(e + s) = log(c / u) for s by Newton in log s.
double heavy_solve(double c, double p, double u) {
  const double target = std::log(c / u);
  double t = target / 4.0;
  for (int it = 0; it < 100; ++it) {
    const double s = std::exp(t);
    const double l = std::log(std::numbers::e + s);
    const double h = 4.0 * t + p * std::log(l) - target;
    const double dh = 4.0 + p * s / ((std::numbers::e + s) * l);
    const double step = h / dh;
    t -= step;
    if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(t))) break;
  }
  return std::exp(t);
}

double integrate_to_infinity(const std::function<double(double)>& f, double a) {
  boost::math::quadrature::exp_sinh<double> integrator;
  // Every integrand here is a tail quantity that vanishes at infinity; far
  // abscissae can overflow into inf * 0.
  return integrator.integrate(
      [&](double x) {
        const double v = f(a + x);
        return std::isfinite(v) ? v : 0.0;
      },
      0.0,
                              std::numeric_limits<double>::infinity(), 1e-13);
}

double integrate(const std::function<double(double)>& f, double a, double b) {
  if (!(b > a)) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 12, 1e-13);
}

}  // namespace

std::string to_string(LawKind kind) {
  switch (kind) {
    case LawKind::gaussian: return "gaussian";
    case LawKind::symmetric_bernoulli: return "symmetric_bernoulli";
    case LawKind::heavy_tail: return "heavy_tail";
    case LawKind::truncated: return "truncated";
  }
  return "unknown";
}

LawKind parse_law_kind(const std::string& name) {
  if (name == "gaussian") return LawKind::gaussian;
  if (name == "symmetric_bernoulli" || name == "bernoulli") return LawKind::symmetric_bernoulli;
  if (name == "heavy_tail" || name == "heavy") return LawKind::heavy_tail;
  if (name == "truncated") return LawKind::truncated;
  throw DomainError("unknown entry law '" + name +
                    "' (expected gaussian, bernoulli, heavy or truncated)");
}

double EntryLaw::heavy_raw_tail(double s) const {
  if (s <= heavy_s0_) return 1.0;
  return heavy_c_ / (std::pow(s, 4) * std::pow(std::log(std::numbers::e + s), heavy_p_));
}

double EntryLaw::heavy_raw_inverse_tail(double u) const {
  return std::max(heavy_s0_, heavy_solve(heavy_c_, heavy_p_, u));
}

double EntryLaw::sample(Rng& rng) const {
  switch (kind_) {
    case LawKind::gaussian:
      return rng.normal();
    case LawKind::symmetric_bernoulli:
      return rng.sign();
    case LawKind::heavy_tail: {
      const double u = rng.uniform_open();
      const double sgn = rng.sign();
      return sgn * heavy_raw_inverse_tail(u) / scale_;
    }
    case LawKind::truncated: {
      double q;
      do {
        q = base_->sample(rng);
      } while (std::abs(q) > cutoff_);
      return (q + shift_) / scale_;
    }
  }
  return 0.0;
}

double EntryLaw::tail(double s) const {
  s = std::abs(s);
  switch (kind_) {
    case LawKind::gaussian: return gauss_tail(s);
    case LawKind::symmetric_bernoulli: return s < 1.0 ? 1.0 : 0.0;
    case LawKind::heavy_tail: return heavy_raw_tail(scale_ * s);
    case LawKind::truncated: {
      const double b = scale_ * s;
      if (b >= cutoff_) return 0.0;
      return (base_->tail(b) - alpha_n_) / (1.0 - alpha_n_);
    }
  }
  return 0.0;
}

double EntryLaw::tail_second_moment(double s) const {
  s = std::abs(s);
  switch (kind_) {
    case LawKind::gaussian: return 2.0 * s * phi(s) + gauss_tail(s);
    case LawKind::symmetric_bernoulli: return s < 1.0 ? 1.0 : 0.0;
    case LawKind::heavy_tail: {
      const double big_s = scale_ * s;
      const double lo = std::max(big_s, heavy_s0_);
      double raw = big_s * big_s * heavy_raw_tail(big_s);
      raw += lo * lo - big_s * big_s;  // T = 1 on [S, s0)
      raw += integrate_to_infinity([&](double u) { return 2.0 * u * heavy_raw_tail(u); }, lo);
      return raw / (scale_ * scale_);
    }
    case LawKind::truncated: {
      const double b = scale_ * s;
      if (b >= cutoff_) return 0.0;
      // Shift is zero for symmetric bases.
      const double mass = base_->tail_second_moment(b) - base_->tail_second_moment(cutoff_);
      return mass / ((1.0 - alpha_n_) * scale_ * scale_);
    }
  }
  return 0.0;
}

double EntryLaw::upper_tail_mean(double s) const {
  s = std::abs(s);
  switch (kind_) {
    case LawKind::gaussian: return phi(s);
    case LawKind::symmetric_bernoulli: return s < 1.0 ? 0.5 : 0.0;
    case LawKind::heavy_tail: {
      const double big_s = scale_ * s;
      const double lo = std::max(big_s, heavy_s0_);
      double raw = big_s * heavy_raw_tail(big_s) + (lo - big_s);
      raw += integrate_to_infinity([&](double u) { return heavy_raw_tail(u); }, lo);
      return 0.5 * raw / scale_;
    }
    case LawKind::truncated: {
      const double b = scale_ * s;
      if (b >= cutoff_) return 0.0;
      const double raw = base_->upper_tail_mean(b) - base_->upper_tail_mean(cutoff_);
      return raw / ((1.0 - alpha_n_) * scale_);
    }
  }
  return 0.0;
}

double EntryLaw::lower_tail_mean(double s) const {
  // Every built-in law is symmetric.
  return -upper_tail_mean(s);
}

double EntryLaw::body_fourth_moment(double s) const {
  s = std::abs(s);
  switch (kind_) {
    case LawKind::gaussian:
      return 3.0 * (1.0 - gauss_tail(s)) - 2.0 * phi(s) * (s * s * s + 3.0 * s);
    case LawKind::symmetric_bernoulli:
      return s >= 1.0 ? 1.0 : 0.0;
    case LawKind::heavy_tail: {
      // E[|r|^4 ; |r| <= L] = int_0^L 4u^3 (T(u) - T(L)) du
      const double big_l = scale_ * s;
      const double tl = heavy_raw_tail(big_l);
      const double knee = std::min(heavy_s0_, big_l);
      double raw = std::pow(knee, 4) * (1.0 - tl);
      raw += integrate([&](double u) { return 4.0 * u * u * u * (heavy_raw_tail(u) - tl); },
                       knee, big_l);
      return raw / std::pow(scale_, 4);
    }
    case LawKind::truncated: {
      const double b = std::min(scale_ * s, cutoff_);
      return base_->body_fourth_moment(b) / ((1.0 - alpha_n_) * std::pow(scale_, 4));
    }
  }
  return 0.0;
}

std::string EntryLaw::id() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind_) {
    case LawKind::gaussian:
    case LawKind::symmetric_bernoulli:
      os << to_string(kind_);
      break;
    case LawKind::heavy_tail:
      os << "heavy_tail(c=" << heavy_c_ << ",p=" << heavy_p_ << ")";
      break;
    case LawKind::truncated:
      os << "truncated(" << base_->id() << ",eps=" << epsilon_ << ",N=" << big_n_ << ")";
      break;
  }
  return os.str();
}

nlohmann::json EntryLaw::descriptor() const {
  nlohmann::json j;
  j["kind"] = to_string(kind_);
  if (kind_ == LawKind::heavy_tail) {
    j["c"] = heavy_c_;
    j["log_power"] = heavy_p_;
    j["scale"] = scale_;
  }
  if (kind_ == LawKind::truncated) {
    j["base"] = base_->descriptor();
    j["epsilon"] = epsilon_;
    j["N"] = big_n_;
    j["cutoff"] = cutoff_;
    j["alpha_n"] = alpha_n_;
    j["beta_n"] = beta_n_;
    j["shift"] = shift_;
    j["raw_variance"] = raw_variance_;
  }
  j["moments"] = {{"mean", moments_.mean},
                  {"variance", moments_.variance},
                  {"third", moments_.third},
                  {"fourth", moments_.finite_fourth ? nlohmann::json(moments_.fourth)
                                                    : nlohmann::json("inf")},
                  {"finite_fourth", moments_.finite_fourth}};
  return j;
}

EntryLaw make_entry_law(LawKind kind, const nlohmann::json& params) {
  EntryLaw law;
  law.kind_ = kind;
  switch (kind) {
    case LawKind::gaussian:
      law.moments_ = {0.0, 1.0, 0.0, 3.0, true};
      break;
    case LawKind::symmetric_bernoulli:
      law.moments_ = {0.0, 1.0, 0.0, 1.0, true};
      break;
    case LawKind::heavy_tail: {
      law.heavy_c_ = params.value("c", 1.0);
      law.heavy_p_ = params.value("log_power", 2.0);
      if (!(law.heavy_c_ > 0.0) || !std::isfinite(law.heavy_c_) || !(law.heavy_p_ > 0.0)) {
        throw DomainError("heavy_tail needs c > 0 and log_power > 0");
      }
      law.heavy_s0_ = heavy_solve(law.heavy_c_, law.heavy_p_, 1.0);
      law.scale_ = 1.0;
      // E r^2 = s0^2 + int_{s0}^inf 2u T(u) du
      const double second =
          law.heavy_s0_ * law.heavy_s0_ +
          integrate_to_infinity([&](double u) { return 2.0 * u * law.heavy_raw_tail(u); },
                                law.heavy_s0_);
      if (!(second > 0.0) || !std::isfinite(second)) {
        throw DomainError("heavy_tail variance is not finite");
      }
      law.scale_ = std::sqrt(second);
      law.moments_.mean = 0.0;
      law.moments_.variance = 1.0;
      law.moments_.third = 0.0;
      law.moments_.finite_fourth = law.heavy_p_ > 1.0;
      if (law.moments_.finite_fourth) {
        const double raw4 =
            std::pow(law.heavy_s0_, 4) +
            integrate_to_infinity(
                [&](double u) { return 4.0 * u * u * u * law.heavy_raw_tail(u); },
                law.heavy_s0_);
        law.moments_.fourth = raw4 / (second * second);
      } else {
        law.moments_.fourth = std::numeric_limits<double>::infinity();
      }
      break;
    }
    case LawKind::truncated: {
      if (!params.contains("base") || !params.contains("epsilon") || !params.contains("N")) {
        throw DomainError("truncated law needs base, epsilon and N");
      }
      const nlohmann::json& b = params["base"];
      const EntryLaw base = b.is_string() ? make_entry_law(parse_law_kind(b.get<std::string>()))
                                          : law_from_descriptor(b);
      return truncate_law(base, params["epsilon"].get<double>(), params["N"].get<long>()).law;
    }
  }
  return law;
}

EntryLaw law_from_descriptor(const nlohmann::json& descriptor) {
  if (!descriptor.is_object() || !descriptor.contains("kind")) {
    throw DomainError("entry-law descriptor needs a kind");
  }
  const LawKind kind = parse_law_kind(descriptor["kind"].get<std::string>());
  nlohmann::json params = nlohmann::json::object();
  if (kind == LawKind::heavy_tail) {
    params["c"] = descriptor.value("c", 1.0);
    params["log_power"] = descriptor.value("log_power", 2.0);
  } else if (kind == LawKind::truncated) {
    params["base"] = descriptor.at("base");
    params["epsilon"] = descriptor.at("epsilon");
    params["N"] = descriptor.at("N");
  }
  return make_entry_law(kind, params);
}

Truncation truncate_law(const EntryLaw& base, double epsilon, long big_n) {
  if (!(epsilon > 0.0 && epsilon < 0.5)) {
    throw DomainError("truncation needs 0 < epsilon < 1/2");
  }
  if (big_n < 1) throw DomainError("truncation needs N >= 1");
  if (base.kind() == LawKind::truncated) {
    throw DomainError("truncating an already truncated law is not supported");
  }
  const double cutoff = std::pow(static_cast<double>(big_n), 0.5 - epsilon);
  Truncation out;
  out.alpha_n = base.tail(cutoff);
  out.beta_n = base.upper_tail_mean(cutoff) + base.lower_tail_mean(cutoff);
  if (!(out.alpha_n < 1.0 - 1e-12)) {
    throw DomainError("cutoff N^{1/2-epsilon} leaves no mass: alpha_N = " +
                      std::to_string(out.alpha_n));
  }
  EntryLaw& law = out.law;
  law.kind_ = LawKind::truncated;
  law.base_ = std::make_shared<const EntryLaw>(base);
  law.epsilon_ = epsilon;
  law.big_n_ = big_n;
  law.cutoff_ = cutoff;
  law.alpha_n_ = out.alpha_n;
  law.beta_n_ = out.beta_n;
  law.shift_ = out.beta_n / (1.0 - out.alpha_n);
  // Conditioned second moment, then centre.
  const double body2 = (1.0 - base.tail_second_moment(cutoff)) / (1.0 - out.alpha_n);
  law.raw_variance_ = body2 - law.shift_ * law.shift_;
  if (!(law.raw_variance_ > 0.0)) {
    throw DomainError("truncated law has zero variance");
  }
  law.scale_ = std::sqrt(law.raw_variance_);
  law.moments_.mean = 0.0;
  law.moments_.variance = 1.0;
  law.moments_.third = 0.0;
  law.moments_.finite_fourth = true;
  law.moments_.fourth = base.body_fourth_moment(cutoff) /
                        ((1.0 - out.alpha_n) * law.raw_variance_ * law.raw_variance_);
  return out;
}

}  // namespace sepcov

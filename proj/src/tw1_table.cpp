#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

// Boost 1.74's pchip calls isnan unqualified.
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>
#include <boost/math/special_functions/airy.hpp>
#include <boost/math/special_functions/legendre.hpp>

#include "sepcov/errors.hpp"
#include "sepcov/model_io.hpp"
#include "sepcov/stats_tests.hpp"

namespace sepcov {

namespace detail {
extern const std::string_view kTw1TableCsv;
}

Tw1Table Tw1Table::parse(std::string_view csv) {
  Tw1Table t;
  std::istringstream in{std::string(csv)};
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      t.provenance_ += line.substr(1) + "\n";
      continue;
    }
    if (!header_seen) {
      header_seen = true;
      if (line.rfind("s,", 0) == 0) continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw DomainError("TW1 table row without a comma: " + line);
    t.s_.push_back(parse_decimal(line.substr(0, comma)));
    t.f_.push_back(parse_decimal(line.substr(comma + 1)));
  }
  if (t.s_.size() < 4) throw DomainError("TW1 table needs at least four rows");
  for (std::size_t i = 1; i < t.s_.size(); ++i) {
    if (!(t.s_[i] > t.s_[i - 1])) throw DomainError("TW1 table abscissae must increase");
  }
  auto interp = std::make_shared<boost::math::interpolators::pchip<std::vector<double>>>(
      std::vector<double>(t.s_), std::vector<double>(t.f_));
  t.interp_ = std::make_shared<const std::function<double(double)>>(
      [interp](double s) { return (*interp)(s); });
  return t;
}

Tw1Table Tw1Table::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot read TW1 table " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const Tw1Table& Tw1Table::embedded() {
  static const Tw1Table table = parse(detail::kTw1TableCsv);
  return table;
}

double Tw1Table::cdf(double s) const {
  if (s <= s_.front()) return 0.0;
  if (s >= s_.back()) return 1.0;
  return std::clamp((*interp_)(s), 0.0, 1.0);
}

bool Tw1Table::monotone() const {
  for (std::size_t i = 1; i < f_.size(); ++i) {
    if (f_[i] < f_[i - 1]) return false;
  }
  return true;
}

double Tw1Table::mean() const {
  // E S = b F(b) - a F(a) - int_a^b F
  double integral = 0.0;
  for (std::size_t i = 1; i < s_.size(); ++i) {
    integral += 0.5 * (f_[i] + f_[i - 1]) * (s_[i] - s_[i - 1]);
  }
  return s_.back() * f_.back() - s_.front() * f_.front() - integral;
}

double Tw1Table::sd() const {
  // E S^2 = b^2 F(b) - a^2 F(a) - int_a^b 2 s F
  double integral = 0.0;
  for (std::size_t i = 1; i < s_.size(); ++i) {
    integral += (s_[i] * f_[i] + s_[i - 1] * f_[i - 1]) * (s_[i] - s_[i - 1]);
  }
  const double m2 = s_.back() * s_.back() * f_.back() - s_.front() * s_.front() * f_.front() -
                    integral;
  const double m = mean();
  return std::sqrt(std::max(0.0, m2 - m * m));
}

double tw1_cdf(double s) { return Tw1Table::embedded().cdf(s); }

double tw1_fredholm(double s, int nodes) {
  if (nodes < 2) throw DomainError("Fredholm quadrature needs at least two nodes");
  const double a = s;
  const double b = std::max(s + 20.0, 24.0 - s);  // Ai((b + s)/2) <= Ai(12)
  std::vector<double> x(static_cast<std::size_t>(nodes)), w(static_cast<std::size_t>(nodes));
  for (int k = 0; k < nodes; ++k) {
    // Zeros of P_nodes on (-1, 1), ascending.
    const double t = -std::cos(std::numbers::pi * (k + 0.75) / (nodes + 0.5));
    double r = t;
    for (int it = 0; it < 100; ++it) {
      const double p = boost::math::legendre_p(nodes, r);
      const double dp = boost::math::legendre_p_prime(nodes, r);
      const double step = p / dp;
      r -= step;
      if (std::abs(step) < 1e-16) break;
    }
    const double dp = boost::math::legendre_p_prime(nodes, r);
    x[static_cast<std::size_t>(k)] = 0.5 * (b - a) * r + 0.5 * (b + a);
    w[static_cast<std::size_t>(k)] = 0.5 * (b - a) * 2.0 / ((1.0 - r * r) * dp * dp);
  }
  Eigen::MatrixXd m(nodes, nodes);
  for (int i = 0; i < nodes; ++i) {
    for (int j = 0; j < nodes; ++j) {
      const double wi = std::sqrt(w[static_cast<std::size_t>(i)]);
      const double wj = std::sqrt(w[static_cast<std::size_t>(j)]);
      const double k = 0.5 * boost::math::airy_ai(
                                 0.5 * (x[static_cast<std::size_t>(i)] + x[static_cast<std::size_t>(j)]));
      m(i, j) = (i == j ? 1.0 : 0.0) - wi * k * wj;
    }
  }
  return Eigen::PartialPivLU<Eigen::MatrixXd>(m).determinant();
}

}  // namespace sepcov

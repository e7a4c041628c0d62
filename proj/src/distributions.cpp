#include "mechlearn/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "mechlearn/quadrature.hpp"

namespace mechlearn {

double lr_point(double s) {
    if (s < 0.0 || s > 1.0) throw OutOfSupport("lr_point: belief outside [0,1]");
    if (s == 1.0) return std::numeric_limits<double>::infinity();
    return s / (1.0 - s);
}

namespace {

double beta_norm_const(double alpha) {
    // 1 / B(alpha, alpha)
    return std::exp(std::lgamma(2.0 * alpha) - 2.0 * std::lgamma(alpha));
}

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

BeliefDistribution BeliefDistribution::uniform() { return BeliefDistribution(); }

BeliefDistribution BeliefDistribution::beta_symmetric(double alpha) {
    if (!(alpha > 0.0)) throw InvalidDistribution("beta_symmetric: alpha must be positive");
    BeliefDistribution d;
    d.family_ = Family::BetaSymmetric;
    d.lo_ = 0.0;
    d.hi_ = 1.0;
    d.alpha_ = alpha;
    d.norm_const_ = beta_norm_const(alpha);
    d.log_concave_ = alpha >= 1.0;
    d.symmetric_ = true;
    return d;
}

BeliefDistribution BeliefDistribution::truncated_normal(double sigma) {
    if (!(sigma > 0.0)) throw InvalidDistribution("truncated_normal: sigma must be positive");
    BeliefDistribution d;
    d.family_ = Family::TruncatedNormal;
    d.lo_ = 0.0;
    d.hi_ = 1.0;
    d.sigma_ = sigma;
    const double z = std_normal_cdf(0.5 / sigma) - std_normal_cdf(-0.5 / sigma);
    d.norm_const_ = 1.0 / (sigma * std::sqrt(2.0 * M_PI) * z);
    d.log_concave_ = true;
    d.symmetric_ = true;
    return d;
}

BeliefDistribution BeliefDistribution::tabulated(std::vector<double> s, std::vector<double> f) {
    if (s.size() < 2 || s.size() != f.size())
        throw InvalidDistribution("tabulated: need matching s/f columns with at least 2 rows");
    const std::size_t n = s.size();
    const double step = (s.back() - s.front()) / static_cast<double>(n - 1);
    if (!(step > 0.0)) throw InvalidDistribution("tabulated: s column must be increasing");
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (std::abs(s[i + 1] - s[i] - step) > 1e-9 * std::max(1.0, std::abs(step)))
            throw InvalidDistribution("tabulated: s grid must be uniform");
        if (f[i] < 0.0) throw InvalidDistribution("tabulated: negative density value");
    }
    if (s.front() < -1e-12 || s.back() > 1.0 + 1e-12)
        throw InvalidDistribution("tabulated: support must lie within [0,1]");
    BeliefDistribution d;
    d.family_ = Family::Tabulated;
    d.lo_ = std::max(0.0, s.front());
    d.hi_ = std::min(1.0, s.back());
    d.tab_s_ = std::move(s);
    d.tab_f_ = std::move(f);
    d.detect_flags();
    return d;
}

BeliefDistribution BeliefDistribution::from_json(const nlohmann::json& spec) {
    const std::string family = spec.at("family").get<std::string>();
    if (family == "uniform") return uniform();
    if (family == "beta_symmetric") return beta_symmetric(spec.at("alpha").get<double>());
    if (family == "truncated_normal") return truncated_normal(spec.at("sigma").get<double>());
    if (family == "tabulated") {
        if (spec.contains("csv")) return tabulated_from_csv(spec.at("csv").get<std::string>());
        return tabulated(spec.at("s").get<std::vector<double>>(),
                         spec.at("f").get<std::vector<double>>());
    }
    throw InvalidDistribution("unknown distribution family: " + family);
}

BeliefDistribution BeliefDistribution::tabulated_from_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidDistribution("cannot open density CSV: " + path);
    std::vector<double> s, f;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        // Skip a header row if the first field is not numeric.
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream row(line);
        double a, b;
        if (!(row >> a >> b)) {
            if (s.empty()) continue;
            throw InvalidDistribution("malformed density CSV row: " + line);
        }
        s.push_back(a);
        f.push_back(b);
    }
    return tabulated(std::move(s), std::move(f));
}

double BeliefDistribution::pdf(double s) const {
    // Endpoints never carry mass; evaluate as one-sided interior limits.
    s = std::clamp(s, lo_, hi_);
    switch (family_) {
        case Family::Uniform:
            return 1.0 / (hi_ - lo_);
        case Family::BetaSymmetric:
            return norm_const_ * std::pow(s, alpha_ - 1.0) * std::pow(1.0 - s, alpha_ - 1.0);
        case Family::TruncatedNormal: {
            const double z = (s - 0.5) / sigma_;
            return norm_const_ * std::exp(-0.5 * z * z);
        }
        case Family::Tabulated: {
            const std::size_t n = tab_s_.size();
            const double step = (tab_s_.back() - tab_s_.front()) / static_cast<double>(n - 1);
            const double pos = (s - tab_s_.front()) / step;
            const std::size_t k = std::min<std::size_t>(n - 2, static_cast<std::size_t>(std::max(0.0, pos)));
            const double t = pos - static_cast<double>(k);
            return tab_f_[k] + (tab_f_[k + 1] - tab_f_[k]) * std::clamp(t, 0.0, 1.0);
        }
    }
    return 0.0;
}

double BeliefDistribution::pdf_deriv(double s) const {
    s = std::clamp(s, lo_, hi_);
    switch (family_) {
        case Family::Uniform:
            return 0.0;
        case Family::BetaSymmetric: {
            if (alpha_ == 1.0) return 0.0;
            const double sc = std::clamp(s, 1e-300, 1.0 - 1e-16);
            return pdf(sc) * (alpha_ - 1.0) * (1.0 / sc - 1.0 / (1.0 - sc));
        }
        case Family::TruncatedNormal:
            return -pdf(s) * (s - 0.5) / (sigma_ * sigma_);
        case Family::Tabulated: {
            const std::size_t n = tab_s_.size();
            const double step = (tab_s_.back() - tab_s_.front()) / static_cast<double>(n - 1);
            const double pos = (s - tab_s_.front()) / step;
            const std::size_t k = std::min<std::size_t>(n - 2, static_cast<std::size_t>(std::max(0.0, pos)));
            return (tab_f_[k + 1] - tab_f_[k]) / step;
        }
    }
    return 0.0;
}

double BeliefDistribution::cdf(double s) const {
    if (s <= lo_) return 0.0;
    if (s >= hi_) return 1.0;
    switch (family_) {
        case Family::Uniform:
            return (s - lo_) / (hi_ - lo_);
        case Family::TruncatedNormal: {
            const double z = std_normal_cdf(0.5 / sigma_) - std_normal_cdf(-0.5 / sigma_);
            return (std_normal_cdf((s - 0.5) / sigma_) - std_normal_cdf(-0.5 / sigma_)) / z;
        }
        default:
            return integrate([this](double t) { return pdf(t); }, lo_, s,
                             std::max(16, static_cast<int>(128 * (s - lo_) / (hi_ - lo_))));
    }
}

nlohmann::json BeliefDistribution::describe() const {
    switch (family_) {
        case Family::Uniform:
            return {{"family", "uniform"}};
        case Family::BetaSymmetric:
            return {{"family", "beta_symmetric"}, {"alpha", alpha_}};
        case Family::TruncatedNormal:
            return {{"family", "truncated_normal"}, {"sigma", sigma_}};
        case Family::Tabulated:
            return {{"family", "tabulated"}, {"s", tab_s_}, {"f", tab_f_}};
    }
    return {};
}

namespace {
constexpr int kFlagGridPoints = 1001;
constexpr double kFlagTol = 1e-9;

struct GridChecks {
    bool log_concave;
    bool symmetric;
    double min_density;
    double deriv_ratio_bound;
};

GridChecks run_grid_checks(const BeliefDistribution& d) {
    const double lo = d.support_lo(), hi = d.support_hi();
    const double step = (hi - lo) / (kFlagGridPoints - 1);
    std::vector<double> logf(kFlagGridPoints);
    GridChecks out{true, true, std::numeric_limits<double>::infinity(), 0.0};
    for (int i = 0; i < kFlagGridPoints; ++i) {
        const double s = lo + i * step;
        const double f = d.pdf(s);
        logf[i] = std::log(f);
        const double fr = d.pdf(hi - (s - lo));
        if (std::abs(f - fr) > kFlagTol) out.symmetric = false;
        // Interior points only: endpoint densities may vanish for families
        // like the symmetric beta, where f'/f is unbounded at the edges.
        if (i > 0 && i + 1 < kFlagGridPoints) {
            out.min_density = std::min(out.min_density, f);
            if (f > 0.0)
                out.deriv_ratio_bound = std::max(out.deriv_ratio_bound, std::abs(d.pdf_deriv(s) / f));
        }
    }
    for (int i = 1; i + 1 < kFlagGridPoints; ++i) {
        const double d2 = logf[i - 1] - 2.0 * logf[i] + logf[i + 1];
        if (!(d2 <= kFlagTol)) {  // -inf endpoints never break concavity
            out.log_concave = false;
            break;
        }
    }
    // The symmetry check must also agree about the support itself.
    if (std::abs((lo + hi) - 1.0) > kFlagTol) out.symmetric = false;
    return out;
}
}  // namespace

void BeliefDistribution::detect_flags() {
    const GridChecks c = run_grid_checks(*this);
    log_concave_ = c.log_concave;
    symmetric_ = c.symmetric;
}

ValidationReport BeliefDistribution::validate() const {
    ValidationReport r;
    const double total = integrate([this](double s) { return pdf(s); }, lo_, hi_, 256);
    const double mean = integrate([this](double s) { return s * pdf(s); }, lo_, hi_, 256);
    r.norm_error = std::abs(total - 1.0);
    r.mean_error = std::abs(mean - 0.5);
    const GridChecks c = run_grid_checks(*this);
    r.min_density = c.min_density;
    r.deriv_ratio_bound = c.deriv_ratio_bound;
    r.log_concave = c.log_concave;
    r.symmetric_about_half = c.symmetric;
    r.passed = r.norm_error <= 1e-8 && r.mean_error <= 1e-8 && r.min_density > 0.0;
    if (r.norm_error > 1e-6)
        throw InvalidDistribution("density does not integrate to 1 (error " +
                                  std::to_string(r.norm_error) + ")");
    if (r.mean_error > 1e-6)
        throw InvalidDistribution("belief mean differs from 1/2 (error " +
                                  std::to_string(r.mean_error) + "): not Bayes plausible");
    return r;
}

double conditional_pdf(const BeliefDistribution& d, double s, State w) {
    if (s < d.support_lo() - 1e-12 || s > d.support_hi() + 1e-12)
        throw OutOfSupport("conditional_pdf: belief outside the support");
    const double f = d.pdf(s);
    return w == State::Plus ? 2.0 * s * f : 2.0 * (1.0 - s) * f;
}

double conditional_prob(const BeliefDistribution& d, double a, double b, State w) {
    a = std::max(a, d.support_lo());
    b = std::min(b, d.support_hi());
    if (!(b > a)) return 0.0;
    return integrate([&](double s) { return conditional_pdf(d, s, w); }, a, b, 128);
}

ConditionalSampler::ConditionalSampler(const BeliefDistribution& d, State w, int grid_points) {
    const double lo = d.support_lo(), hi = d.support_hi();
    const double step = (hi - lo) / (grid_points - 1);
    s_.resize(grid_points);
    cum_.resize(grid_points);
    cum_[0] = 0.0;
    s_[0] = lo;
    for (int i = 1; i < grid_points; ++i) {
        s_[i] = lo + i * step;
        cum_[i] = cum_[i - 1] +
                  integrate_panel([&](double t) { return conditional_pdf(d, t, w); }, s_[i - 1], s_[i]);
    }
    const double total = cum_.back();
    for (double& c : cum_) c /= total;
}

double ConditionalSampler::draw(RngStream& rng) const {
    const double u = rng.next_double();
    const auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
    const std::size_t k = std::min<std::size_t>(cum_.size() - 1, static_cast<std::size_t>(it - cum_.begin()));
    const double c0 = cum_[k - 1], c1 = cum_[k];
    const double t = c1 > c0 ? (u - c0) / (c1 - c0) : 0.5;
    return s_[k - 1] + t * (s_[k] - s_[k - 1]);
}

double ConditionalSampler::cdf(double s) const {
    if (s <= s_.front()) return 0.0;
    if (s >= s_.back()) return 1.0;
    const double step = s_[1] - s_[0];
    const double pos = (s - s_.front()) / step;
    const std::size_t k = std::min<std::size_t>(s_.size() - 2, static_cast<std::size_t>(pos));
    const double t = pos - static_cast<double>(k);
    return cum_[k] + t * (cum_[k + 1] - cum_[k]);
}

}  // namespace mechlearn

#include "mechlearn/grid_dist.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <mutex>

#include <fftw3.h>

#include "mechlearn/quadrature.hpp"

namespace mechlearn {

namespace {

// FFTW planning is not thread-safe and the transforms here are cheap, so all
// FFT work runs under one lock.
std::mutex g_fft_mutex;

struct FftPlans {
    int n;
    double* real;
    fftw_complex* cplx;
    fftw_plan fwd, bwd;
};

FftPlans& plans_for(int n) {
    static std::map<int, FftPlans> cache;
    auto it = cache.find(n);
    if (it == cache.end()) {
        FftPlans p;
        p.n = n;
        p.real = fftw_alloc_real(n);
        p.cplx = fftw_alloc_complex(n / 2 + 1);
        p.fwd = fftw_plan_dft_r2c_1d(n, p.real, p.cplx, FFTW_ESTIMATE);
        p.bwd = fftw_plan_dft_c2r_1d(n, p.cplx, p.real, FFTW_ESTIMATE);
        it = cache.emplace(n, p).first;
    }
    return it->second;
}

// Linear convolution of two equal-length mass arrays.
std::vector<double> linear_convolution(const std::vector<double>& a, const std::vector<double>& b) {
    const int n = static_cast<int>(a.size());
    const int out_len = 2 * n - 1;
    int padded = 1;
    while (padded < out_len) padded <<= 1;

    std::lock_guard<std::mutex> lock(g_fft_mutex);
    FftPlans& p = plans_for(padded);
    const int nc = padded / 2 + 1;
    std::vector<std::complex<double>> fa(nc), fb(nc);

    std::fill(p.real, p.real + padded, 0.0);
    std::copy(a.begin(), a.end(), p.real);
    fftw_execute(p.fwd);
    std::copy(reinterpret_cast<std::complex<double>*>(p.cplx),
              reinterpret_cast<std::complex<double>*>(p.cplx) + nc, fa.begin());

    std::fill(p.real, p.real + padded, 0.0);
    std::copy(b.begin(), b.end(), p.real);
    fftw_execute(p.fwd);
    std::copy(reinterpret_cast<std::complex<double>*>(p.cplx),
              reinterpret_cast<std::complex<double>*>(p.cplx) + nc, fb.begin());

    auto* prod = reinterpret_cast<std::complex<double>*>(p.cplx);
    for (int i = 0; i < nc; ++i) prod[i] = fa[i] * fb[i];
    fftw_execute(p.bwd);

    std::vector<double> out(out_len);
    const double scale = 1.0 / padded;
    for (int i = 0; i < out_len; ++i) out[i] = std::max(0.0, p.real[i] * scale);
    return out;
}

void check_grid(int npoints, double log_range) {
    const int cells = npoints - 1;
    if (cells <= 0 || (cells & (cells - 1)) != 0)
        throw Error("log-LR grid size must be a power of two plus one");
    if (!(log_range > 0.0)) throw Error("log-LR range must be positive");
}

double logistic(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace

double GridDistribution::interior_mass() const {
    double t = 0.0;
    for (double m : mass) t += m;
    return t;
}

double GridDistribution::total_mass() const { return interior_mass() + atom_neg + atom_pos; }

void GridDistribution::finalize() {
    if (std::abs(total_mass() - 1.0) > 1e-10)
        throw Error("grid distribution mass accounting error: total " + std::to_string(total_mass()));
    suffix_.assign(npoints + 1, 0.0);
    for (int k = npoints - 1; k >= 0; --k) suffix_[k] = suffix_[k + 1] + mass[k];
}

GridDistribution single_log_lr(const BeliefDistribution& d, State w, int npoints, double log_range) {
    check_grid(npoints, log_range);
    GridDistribution g;
    g.log_range = log_range;
    g.npoints = npoints;
    g.step = 2.0 * log_range / (npoints - 1);
    g.state = w;
    g.signal_count = 1;
    g.mass.assign(npoints, 0.0);

    const double lo = d.support_lo(), hi = d.support_hi();
    // Cell edges in belief space; cell k covers log LR in
    // [z_k - step/2, z_k + step/2), i.e. s in [sig(edge_k), sig(edge_{k+1})).
    double below = 0.0;
    double prev_edge = std::clamp(logistic(-log_range - 0.5 * g.step), lo, hi);
    below = integrate([&](double s) { return conditional_pdf(d, s, w); }, lo, prev_edge, 32);
    double covered = below;
    for (int k = 0; k < npoints; ++k) {
        const double edge = std::clamp(logistic(g.z(k) + 0.5 * g.step), lo, hi);
        if (edge > prev_edge) {
            const double m =
                integrate([&](double s) { return conditional_pdf(d, s, w); }, prev_edge, edge, 4);
            g.mass[k] = m;
            covered += m;
            prev_edge = edge;
        }
    }
    double above = 0.0;
    if (hi > prev_edge)
        above = integrate([&](double s) { return conditional_pdf(d, s, w); }, prev_edge, hi, 32);
    covered += above;

    // Absorb quadrature slack into the largest cell so the masses are exact.
    const double slack = 1.0 - covered;
    auto biggest = std::max_element(g.mass.begin(), g.mass.end());
    *biggest += slack;
    g.atom_neg = below;
    g.atom_pos = above;
    if (g.atom_neg + g.atom_pos > kMaxClippedAtomMass)
        throw RangeTooSmall("single_log_lr: clipped tail mass " +
                            std::to_string(g.atom_neg + g.atom_pos) + " exceeds budget; raise L");
    g.finalize();
    return g;
}

GridDistribution convolve(const GridDistribution& a, const GridDistribution& b) {
    if (a.npoints != b.npoints || std::abs(a.log_range - b.log_range) > 1e-12)
        throw Error("convolve: mismatched grids");
    GridDistribution g;
    g.log_range = a.log_range;
    g.npoints = a.npoints;
    g.step = a.step;
    g.state = a.state;
    g.signal_count = a.signal_count + b.signal_count;
    g.mass.assign(a.npoints, 0.0);

    const std::vector<double> conv = linear_convolution(a.mass, b.mass);
    // z_i + z_j = -L + (i + j - (N-1)/2) * step: realigning onto the original
    // grid shifts indices by (N-1)/2; spill on either side joins the atoms.
    const int shift = (a.npoints - 1) / 2;
    double spill_neg = 0.0, spill_pos = 0.0;
    for (int t = 0; t < static_cast<int>(conv.size()); ++t) {
        const int k = t - shift;
        if (k < 0)
            spill_neg += conv[t];
        else if (k >= a.npoints)
            spill_pos += conv[t];
        else
            g.mass[k] = conv[t];
    }

    const double fa = a.interior_mass(), fb = b.interior_mass();
    // An infinite atom plus any finite value stays infinite; the (pos, neg)
    // cross terms are indeterminate and split evenly (their mass is bounded
    // by the product of two clipped tails, below 1e-8 for legal inputs).
    const double cross = a.atom_pos * b.atom_neg + a.atom_neg * b.atom_pos;
    g.atom_pos = spill_pos + a.atom_pos * (fb + b.atom_pos) + b.atom_pos * fa + 0.5 * cross;
    g.atom_neg = spill_neg + a.atom_neg * (fb + b.atom_neg) + b.atom_neg * fa + 0.5 * cross;

    // FFT round-off perturbs the total at the 1e-15 level; restore it exactly.
    const double total = g.total_mass();
    if (total > 0.0) {
        const double fix = 1.0 / total;
        for (double& m : g.mass) m *= fix;
        g.atom_pos *= fix;
        g.atom_neg *= fix;
    }
    if (g.atom_neg + g.atom_pos > kMaxClippedAtomMass)
        throw RangeTooSmall("convolve_m: clipped tail mass exceeds budget; raise L");
    g.finalize();
    return g;
}

GridDistribution convolve_m(const GridDistribution& base, int m) {
    if (m < 0) throw Error("convolve_m: negative signal count");
    if (m == 1) return base;
    GridDistribution unit;
    unit.log_range = base.log_range;
    unit.npoints = base.npoints;
    unit.step = base.step;
    unit.state = base.state;
    unit.signal_count = 0;
    unit.mass.assign(base.npoints, 0.0);
    unit.mass[(base.npoints - 1) / 2] = 1.0;
    unit.finalize();
    if (m == 0) return unit;

    // Binary exponentiation over grid convolution.
    GridDistribution acc = unit;
    GridDistribution pow2 = base;
    bool acc_set = false;
    int rest = m;
    while (rest > 0) {
        if (rest & 1) {
            acc = acc_set ? convolve(acc, pow2) : pow2;
            acc_set = true;
        }
        rest >>= 1;
        if (rest > 0) pow2 = convolve(pow2, pow2);
    }
    acc.signal_count = m;
    return acc;
}

double tail_prob(const GridDistribution& g, double tau) {
    if (tau < 0.0) throw Error("tail_prob: threshold must be nonnegative");
    if (tau == 0.0) return 1.0;  // LR >= 0 is the sure event
    const double t = std::log(tau);
    if (std::isinf(t) && t > 0.0) return g.atom_pos;

    const auto& suffix = g.suffix();
    const double lo_edge = -g.log_range - 0.5 * g.step;
    const double hi_edge = g.log_range + 0.5 * g.step;
    if (t <= lo_edge) return 1.0 - g.atom_neg;
    if (t >= hi_edge) return g.atom_pos;

    const int k = std::clamp(static_cast<int>(std::floor((t + g.log_range) / g.step + 0.5)), 0,
                             g.npoints - 1);
    const double mu = g.mass[k];
    const double neighbors =
        (k > 0 ? g.mass[k - 1] : 0.0) + (k + 1 < g.npoints ? g.mass[k + 1] : 0.0);
    double partial;
    if (mu > 1e-12 && mu > 1e3 * neighbors) {
        // Isolated spike: a genuine atom at the cell center (the m = 0 unit
        // mass, for instance). The weak inequality keeps the atom in the
        // tail when the threshold ties with it.
        partial = t <= g.z(k) ? mu : 0.0;
    } else {
        // Partial mass of cell k above t, from a density model linear within
        // the cell with slope estimated from the neighboring cell masses.
        const double u = std::clamp((t - g.z(k)) / g.step, -0.5, 0.5);
        double slope = 0.0;
        if (k > 0 && k + 1 < g.npoints) slope = 0.5 * (g.mass[k + 1] - g.mass[k - 1]);
        if (std::abs(slope) > 2.0 * mu) slope = 0.0;  // keep the model density nonnegative
        partial = mu * (0.5 - u) + 0.5 * slope * (0.25 - u * u);
    }
    return suffix[k + 1] + std::clamp(partial, 0.0, mu) + g.atom_pos;
}

LikelihoodTails LikelihoodTails::make(const BeliefDistribution& d, int others, int npoints,
                                      double log_range) {
    if (log_range <= 0.0) log_range = auto_log_range(others);
    LikelihoodTails t;
    t.plus = convolve_m(single_log_lr(d, State::Plus, npoints, log_range), others);
    t.minus = convolve_m(single_log_lr(d, State::Minus, npoints, log_range), others);
    return t;
}

}  // namespace mechlearn

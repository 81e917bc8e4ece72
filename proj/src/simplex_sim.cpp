#include "pme/simplex_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "pme/errors.hpp"
#include "pme/math.hpp"
#include "pme/parallel.hpp"

namespace pme {

void McConfig::validate() const {
    if (trials < 1) throw DomainError("McConfig: trials must be >= 1");
    if (streams < 1) throw DomainError("McConfig: streams must be >= 1");
}

void SchemeSpec::validate() const {
    if (m_levels < 2) throw DomainError("SchemeSpec: m_levels must be >= 2");
    if (!(e_over_n >= 0.0) || !std::isfinite(e_over_n)) throw DomainError("SchemeSpec: e_over_n must be finite and >= 0");
}

double simplex_error_prob_integral(double e_over_n, double m) {
    if (!(m >= 2.0)) throw DomainError("simplex_error_prob: m must be >= 2");
    if (!(e_over_n >= 0.0)) throw DomainError("simplex_error_prob: e_over_n must be >= 0");
    const double a = std::sqrt(e_over_n * m / (m - 1.0));
    const double others = m - 1.0;
    auto f = [&](double x) {
        double log_phi_cdf = x < 0.0 ? std::log(q_function(-x)) : std::log1p(-q_function(x));
        double miss = -std::expm1(others * log_phi_cdf);
        double z = x - a;
        return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi) * miss;
    };
    double lo = 0.5 * a - 12.0;
    double hi = a + 12.0;
    std::vector<double> knots{0.5 * a, a, 0.0};
    double p = integrate(f, {lo, hi}, {1e-11, 0.0, 400}, knots);
    return std::clamp(p, 0.0, 1.0);
}

std::vector<std::vector<double>> simplex_constellation(int m, double energy) {
    if (m < 2) throw DomainError("simplex_constellation: m must be >= 2");
    double scale = std::sqrt(energy * m / (m - 1.0));
    std::vector<std::vector<double>> s(m, std::vector<double>(m, -scale / m));
    for (int j = 0; j < m; ++j) s[j][j] += scale;
    return s;
}

int simplex_detect(const std::vector<std::vector<double>>& constellation, const std::vector<double>& y) {
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < constellation.size(); ++j) {
        double score = 0.0;
        for (std::size_t k = 0; k < y.size(); ++k) score += constellation[j][k] * y[k];
        if (score > best_score) {
            best_score = score;
            best = static_cast<int>(j);
        }
    }
    return best;
}

namespace {

std::mt19937_64 stream_engine(std::uint64_t seed, unsigned stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), 0x5eedu};
    return std::mt19937_64(seq);
}

// Received vector y = s_i + noise restricted to the simplex subspace. With the
// centered-identity vertices, <y, s_j> = scale * (y_j - mean(y)) and mean(y) = 0,
// so the max-inner-product decision reduces to argmax_j (amp * [j == i] + z_j):
// the common -amp/M and -mean(z) shifts cancel across all j.
class SimplexChannel {
public:
    SimplexChannel(int m, double e_over_n) : m_(m), amp_(std::sqrt(e_over_n * m / (m - 1.0))) {}

    template <class Engine>
    int transmit(int index, Engine& eng, std::normal_distribution<double>& normal) const {
        int best = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < m_; ++j) {
            double score = normal(eng) + (j == index ? amp_ : 0.0);
            if (score > best_score) {
                best_score = score;
                best = j;
            }
        }
        return best;
    }

private:
    int m_;
    double amp_;
};

std::uint64_t stream_begin(std::uint64_t trials, unsigned streams, unsigned s) {
    return trials / streams * s + std::min<std::uint64_t>(s, trials % streams);
}

}  // namespace

McEstimate simplex_error_prob_mc(const ChannelSpec& ch, int m, const McConfig& mc) {
    ch.validate();
    mc.validate();
    if (m < 2) throw DomainError("simplex_error_prob: m must be >= 2");
    SimplexChannel channel(m, ch.e_over_n);
    std::vector<std::uint64_t> errors(mc.streams, 0);
    parallel_for(mc.streams, [&](std::size_t s) {
        auto eng = stream_engine(mc.seed, static_cast<unsigned>(s));
        std::normal_distribution<double> normal;
        std::uniform_int_distribution<int> pick(0, m - 1);
        std::uint64_t n = stream_begin(mc.trials, mc.streams, static_cast<unsigned>(s) + 1) -
                          stream_begin(mc.trials, mc.streams, static_cast<unsigned>(s));
        std::uint64_t err = 0;
        for (std::uint64_t t = 0; t < n; ++t) {
            int i = pick(eng);
            if (channel.transmit(i, eng, normal) != i) ++err;
        }
        errors[s] = err;
    });
    std::uint64_t total = 0;
    for (auto e : errors) total += e;
    double p = static_cast<double>(total) / static_cast<double>(mc.trials);
    return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(mc.trials))};
}

double simplex_error_prob(const ChannelSpec& ch, int m, const SimplexMethod& method) {
    ch.validate();
    if (const auto* mcm = std::get_if<sim::MonteCarlo>(&method)) return simplex_error_prob_mc(ch, m, mcm->mc).value;
    return simplex_error_prob_integral(ch.e_over_n, m);
}

double ExceedanceCurve::second_moment() const {
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < delta.size(); ++k)
        s += 0.5 * (delta[k + 1] - delta[k]) * (delta[k] * prob[k] + delta[k + 1] * prob[k + 1]);
    return 2.0 * s;
}

ExceedanceCurve ExceedanceCurve::resampled(int points) const {
    if (points < 2 || delta.size() < 2) return *this;
    ExceedanceCurve out;
    std::size_t last = delta.size() - 1;
    for (int k = 0; k < points; ++k) {
        auto idx = static_cast<std::size_t>(std::llround(static_cast<double>(k) * last / (points - 1)));
        out.delta.push_back(delta[idx]);
        out.prob.push_back(prob[idx]);
    }
    return out;
}

SimulationResult simulate_quantize_simplex(const SchemeSpec& sch, const McConfig& mc) {
    sch.validate();
    mc.validate();
    const int m = sch.m_levels;
    const std::size_t bins = std::min<std::size_t>(std::max<std::size_t>(4096, 256 * static_cast<std::size_t>(m)), 1u << 20);
    const double width = 1.0 / static_cast<double>(bins);
    SimplexChannel channel(m, sch.e_over_n);

    struct Acc {
        double sum2 = 0.0;
        double sum4 = 0.0;
        std::vector<std::uint64_t> hist;
    };
    std::vector<Acc> acc(mc.streams);
    parallel_for(mc.streams, [&](std::size_t s) {
        auto eng = stream_engine(mc.seed, static_cast<unsigned>(s));
        std::normal_distribution<double> normal;
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        Acc a;
        a.hist.assign(bins + 1, 0);
        std::uint64_t n = stream_begin(mc.trials, mc.streams, static_cast<unsigned>(s) + 1) -
                          stream_begin(mc.trials, mc.streams, static_cast<unsigned>(s));
        for (std::uint64_t t = 0; t < n; ++t) {
            double u = uni(eng);
            int cell = std::min(static_cast<int>(u * m), m - 1);
            int decided = channel.transmit(cell, eng, normal);
            double err = (decided + 0.5) / m - u;
            double e2 = err * err;
            a.sum2 += e2;
            a.sum4 += e2 * e2;
            auto b = static_cast<std::size_t>(std::abs(err) / width);
            ++a.hist[std::min(b, bins)];
        }
        acc[s] = std::move(a);
    });

    double sum2 = 0.0, sum4 = 0.0;
    std::vector<std::uint64_t> hist(bins + 1, 0);
    for (const auto& a : acc) {
        sum2 += a.sum2;
        sum4 += a.sum4;
        for (std::size_t b = 0; b <= bins; ++b) hist[b] += a.hist[b];
    }
    const auto n = static_cast<double>(mc.trials);
    SimulationResult res;
    res.trials = mc.trials;
    res.mse = sum2 / n;
    double var = n > 1 ? std::max(0.0, (sum4 / n - res.mse * res.mse) * n / (n - 1.0)) : 0.0;
    res.std_error = std::sqrt(var / n);
    // prob[k] = fraction with |err| > k * width; samples in bin b exceed every grid point k <= b.
    res.exceedance.delta.resize(bins + 1);
    res.exceedance.prob.resize(bins + 1);
    std::uint64_t above = 0;
    for (std::size_t k = bins + 1; k-- > 0;) {
        above += hist[k];
        res.exceedance.delta[k] = static_cast<double>(k) * width;
        res.exceedance.prob[k] = static_cast<double>(above) / n;
    }
    return res;
}

SeriesValue conjectured_mse_bound(const ChannelSpec& ch, const TruncationPolicy& trunc) {
    return mse_lower_bound(ch, zr::SimplexExact{}, trunc);
}

}  // namespace pme

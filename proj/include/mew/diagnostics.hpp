#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mew/chain.hpp"

namespace mew {

// two-sample Kolmogorov-Smirnov distance: sup_x |ECDF_a(x) - ECDF_b(x)|
double ks_1d(std::span<const double> a, std::span<const double> b);

// one-sample statistic against a reference CDF, evaluated at the sample
// points and their left limits
double ks_1d_to_cdf(std::span<const double> a, const std::function<double(double)>& cdf);

struct Point2 {
    double x = 0.0, y = 0.0;
};

// Fasano-Franceschini two-sample 2D statistic: max over the four open
// quadrants at every sample point, averaged over the a-centered and
// b-centered maxima.
double ks_2d(std::span<const Point2> a, std::span<const Point2> b);

// one chain's recorded observable draws
struct SampleSeries {
    std::vector<std::int64_t> steps;
    std::vector<double> values;
    std::vector<double> values2;  // second observable (2D mode); may be empty
};

SampleSeries series_from_records(const std::vector<EnsembleRecord>& records,
                                 const std::string& observable,
                                 const std::string& observable2 = "");

struct KsReference {
    std::vector<double> samples;          // two-sample mode when non-empty
    std::function<double(double)> cdf;    // otherwise one-sample mode
};

struct KsCurve {
    std::vector<std::int64_t> checkpoints;
    std::vector<double> pairwise_mean;
    std::optional<std::vector<double>> to_target_mean;
};

// At each checkpoint: KS over every unordered chain pair's thinned prefix,
// averaged; plus the mean distance to the reference when one is given.
// Throws MewError on fewer than two chains or a checkpoint beyond the
// available samples.
KsCurve pairwise_curves(const std::vector<SampleSeries>& chains,
                        const std::vector<std::int64_t>& checkpoints, int thin = 100,
                        const KsReference* reference = nullptr, bool two_d = false);

void write_ks_curve_csv(std::ostream& out, const KsCurve& curve);
nlohmann::ordered_json ks_curve_json(const KsCurve& curve);

struct SweepAxis {
    std::string param;  // "beta:<term index>" or "center:<term index>"
    std::vector<double> values;
};

struct SweepGrid {
    SweepAxis axis1, axis2;
    std::vector<double> cells;  // row-major: [i1 * axis2.values.size() + i2]
};

// Runs an ensemble per cell with the axis parameters patched into the energy
// spec and fills the mean pairwise 2D KS over the two named observables.
// Cell seeds derive from stream_seed(cfg.seed, 0x10000 + cell_index).
SweepGrid sweep(const DualGraph& g, const ChainConfig& base, const SweepAxis& axis1,
                const SweepAxis& axis2, int chain_count, const std::string& observable1,
                const std::string& observable2, int thin = 100, int threads = 0);

void write_sweep_csv(std::ostream& out, const SweepGrid& grid);
nlohmann::ordered_json sweep_json(const SweepGrid& grid);

struct ToyTiltResult {
    double mean = 0.0;
    double variance = 0.0;
    std::int64_t accepted = 0;
    std::int64_t steps = 0;
    // untruncated closed-form targets (mu - lambda/(2 beta), 1/(2 beta))
    double predicted_mean = 0.0;
    double predicted_variance = 0.0;
    // exact stationary moments including the truncation of the tilted
    // Gaussian at zero (the proposal's support boundary)
    double exact_mean = 0.0;
    double exact_variance = 0.0;
};

// Independence chain: propose x' ~ Exp(lambda), accept on the Gaussian energy
// ratio alone (no proposal correction, matching the walk's uncorrected
// behavior); `corrected` adds the Hastings term and recovers the Gaussian
// centered at mu.
ToyTiltResult toy_tilt(double lambda, double beta, double mu, std::int64_t steps,
                       std::uint64_t seed, bool corrected = false);

// mean/variance of a N(m, sigma^2) conditioned on being >= 0
std::pair<double, double> truncated_normal_moments(double m, double sigma);

}  // namespace mew

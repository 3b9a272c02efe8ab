#include "synapse/kerr.hpp"

#include <algorithm>
#include <cmath>

namespace synapse {

namespace {
constexpr std::size_t kTraceSamples = 256;
constexpr double kStepWidthMT = 0.08;

double smooth_step(double h, double center) {
    return 1.0 / (1.0 + std::exp(-(h - center) / kStepWidthMT));
}
}  // namespace

KerrTrace synthesize_kerr_trace(int passed, double depin_field_mT,
                                double notch_field_mT, double noise_amplitude,
                                Rng& rng) {
    if (passed != 0 && passed != 1)
        throw std::invalid_argument("passed must be 0 or 1");
    if (passed == 0 && !(notch_field_mT < depin_field_mT))
        throw std::invalid_argument(
            "pinned trace requires notch_field < depin_field");
    KerrTrace trace;
    trace.field_axis_mT.resize(kTraceSamples);
    trace.signal.resize(kTraceSamples);
    const double h_max = depin_field_mT + 3.0;
    // pinned: split the transition 40/60 at worst between the two steps
    const double a1 = passed ? 1.0 : 0.4 + 0.2 * uniform01(rng);
    for (std::size_t i = 0; i < kTraceSamples; ++i) {
        const double h =
            h_max * static_cast<double>(i) / (kTraceSamples - 1);
        trace.field_axis_mT[i] = h;
        double s = a1 * smooth_step(h, notch_field_mT);
        if (!passed) s += (1.0 - a1) * smooth_step(h, depin_field_mT);
        if (noise_amplitude > 0.0)
            s += noise_amplitude * (2.0 * uniform01(rng) - 1.0);
        trace.signal[i] = s;
    }
    return trace;
}

int detect_pinning(const KerrTrace& trace) {
    const std::size_t n = trace.signal.size();
    if (n < 16 || trace.field_axis_mT.size() != n)
        throw DetectionError("trace too short (need >= 16 samples)");

    // moving-average smoothing before differentiation
    const std::size_t w = std::max<std::size_t>(3, n / 64) | 1;
    std::vector<double> sm(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= w / 2 ? i - w / 2 : 0;
        const std::size_t hi = std::min(n - 1, i + w / 2);
        double acc = 0.0;
        for (std::size_t j = lo; j <= hi; ++j) acc += trace.signal[j];
        sm[i] = acc / static_cast<double>(hi - lo + 1);
    }

    const double total = sm[n - 1] - sm[0];
    if (std::abs(total) < 1e-6)
        throw DetectionError("flat trace: no transition to classify");

    std::vector<double> deriv(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) deriv[i] = sm[i + 1] - sm[i];
    const double dmax = *std::max_element(deriv.begin(), deriv.end());
    const double threshold = 0.25 * dmax;

    // contiguous above-threshold regions of the derivative are the
    // candidate peaks; noise can nick a single peak, so regions closer
    // than two smoothing windows are merged before measuring
    std::vector<std::pair<std::size_t, std::size_t>> regions;
    std::size_t i = 0;
    while (i < deriv.size()) {
        if (deriv[i] <= threshold) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < deriv.size() && deriv[j] > threshold) ++j;
        if (!regions.empty() && i - regions.back().second <= 2 * w)
            regions.back().second = j;
        else
            regions.emplace_back(i, j);
        i = j;
    }

    // step size: raw smoothed change across the region, padded by the
    // smoothing window
    std::size_t qualifying = 0;
    for (const auto& [beg, end] : regions) {
        const std::size_t lo = beg >= w ? beg - w : 0;
        const std::size_t hi = std::min(n - 1, end + w);
        const double step = sm[hi] - sm[lo];
        if (step > 0.24 * std::abs(total)) ++qualifying;
    }
    return qualifying >= 2 ? 0 : 1;
}

}  // namespace synapse

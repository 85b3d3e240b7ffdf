#include "ptspec/spectroscopy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ptspec/errors.hpp"

namespace ptspec {

CMatrix CorrelationEngine::sweep(const InterventionSchedule& sched, std::span<const std::size_t> which,
                                 std::size_t first_step, std::size_t last_step) const {
    if (last_step < first_step) throw ScheduleError("sweep: empty step range");
    std::vector<CorrelationSeries> rows;
    std::size_t width = max_steps() + 1;
    for (std::size_t step = first_step; step <= last_step; ++step) {
        InterventionSchedule moved = sched;
        for (std::size_t w : which) {
            if (w >= moved.entries.size()) throw ScheduleError("sweep: entry index out of range");
            moved.entries[w].step = step;
        }
        rows.push_back(correlate(moved));
        width = std::min(width, rows.back().values.size());
    }
    CMatrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < width; ++c)
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r].values[c];
    return out;
}

PtEngine::PtEngine(std::shared_ptr<const ProcessTensorMPO> pt, const SystemModel& s)
    : pt_(std::move(pt)), propagator_(SystemPropagator::from_model(s, pt_->dt)) {}

CorrelationSeries PtEngine::correlate(const InterventionSchedule& sched) const {
    return evolve_with_pt(*pt_, propagator_, sched);
}

CMatrix PtEngine::sweep(const InterventionSchedule& sched, std::span<const std::size_t> which,
                        std::size_t first_step, std::size_t last_step) const {
    return sweep_intervention(*pt_, propagator_, sched, which, first_step, last_step).values;
}

MasterEquationEngine::MasterEquationEngine(LindbladModel model, double dt, std::size_t n_steps)
    : model_(std::move(model)), dt_(dt), n_steps_(n_steps) {
    if (!(dt > 0.0)) throw DomainError("master equation engine: dt must be > 0");
    model_.validate();
    if (model_.flavor == MeFlavor::PME && model_.dressing_bath) {
        dressing_ = PolaronDressing::compute(*model_.dressing_bath, dt, n_steps);
    }
}

CorrelationSeries MasterEquationEngine::correlate(const InterventionSchedule& sched) const {
    return me_multitime_correlation(model_, sched, dt_, n_steps_, dressing_ ? &*dressing_ : nullptr);
}

CorrelationSeries linear_response(const CorrelationEngine& engine, std::size_t n_t, Transition which) {
    if (n_t == 0 || n_t - 1 > engine.max_steps()) {
        throw DomainError("linear_response: grid longer than the engine's time range");
    }
    const Matrix3 v = dipole_operator(which);
    InterventionSchedule sched;
    sched.entries = {{0, v, Side::Left}, {0, v, Side::Left}};
    CorrelationSeries full = engine.correlate(sched);
    full.times.resize(n_t);
    full.values.resize(n_t);
    return full;
}

std::array<Side, 4> pathway_sides(int pathway) {
    constexpr Side L = Side::Left;
    constexpr Side R = Side::Right;
    switch (pathway) {
        case 1: return {L, R, R, L};
        case 2: return {R, L, R, L};
        case 3: return {R, R, L, L};
        case 4: return {L, L, L, L};
        default: throw DomainError("pathway index must be 1..4");
    }
}

InterventionSchedule pathway_schedule(int pathway, std::size_t t1_step, Transition which) {
    const auto sides = pathway_sides(pathway);
    const Matrix3 v = dipole_operator(which);
    InterventionSchedule sched;
    sched.entries = {{0, v, sides[0]}, {t1_step, v, sides[1]}, {t1_step, v, sides[2]},
                     {t1_step, v, sides[3]}};
    return sched;
}

ResponseSet response_pathways(const CorrelationEngine& engine, std::size_t n1, std::size_t n3,
                              Transition which) {
    if (n1 == 0 || n3 == 0) throw DomainError("response_pathways: empty grid");
    if ((n1 - 1) + (n3 - 1) > engine.max_steps()) {
        throw DomainError("response_pathways: t1 + t3 range exceeds the engine's time range");
    }
    ResponseSet rs;
    rs.dt = engine.dt();
    const std::size_t moved[3] = {1, 2, 3};
    CMatrix* targets[4] = {&rs.r1, &rs.r2, &rs.r3, &rs.r4};
    for (int p = 1; p <= 4; ++p) {
        const CMatrix rows = engine.sweep(pathway_schedule(p, 0, which), moved, 0, n1 - 1);
        *targets[p - 1] = rows.leftCols(static_cast<Eigen::Index>(n3));
    }
    return rs;
}

std::vector<double> window_weights(std::size_t n, const Window& window) {
    std::vector<double> w(n, 1.0);
    for (std::size_t m = 0; m < n; ++m) {
        if (window.half_cosine) {
            w[m] = std::cos(0.5 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(n));
        }
    }
    if (n > 0) w[0] *= 0.5;
    return w;
}

namespace {

std::size_t padded_length(std::size_t n, const Window& window) {
    if (window.pad_factor == 0) throw DomainError("window: pad_factor must be >= 1");
    return n * window.pad_factor;
}

// Signed bins k_lo .. n_pad / 2; k_lo = 1 - n_pad / 2 with negative frequencies, else 0.
std::ptrdiff_t lowest_bin(std::size_t n_pad, const Window& window) {
    return window.negative_frequencies ? 1 - static_cast<std::ptrdiff_t>(n_pad / 2) : 0;
}

// Rows k = k_lo .. n_pad / 2 of the forward kernel w_m e^{2 pi i k m / n_pad}.
CMatrix forward_kernel(std::size_t n, const Window& window) {
    const std::size_t n_pad = padded_length(n, window);
    const auto w = window_weights(n, window);
    const std::ptrdiff_t k_lo = lowest_bin(n_pad, window);
    const auto k_hi = static_cast<std::ptrdiff_t>(n_pad / 2);
    const auto n_pad_s = static_cast<std::ptrdiff_t>(n_pad);
    CMatrix e(static_cast<Eigen::Index>(k_hi - k_lo + 1), static_cast<Eigen::Index>(n));
    for (std::ptrdiff_t k = k_lo; k <= k_hi; ++k) {
        const auto k_mod = static_cast<std::size_t>((k % n_pad_s + n_pad_s) % n_pad_s);
        for (std::size_t m = 0; m < n; ++m) {
            const double phase = 2.0 * std::numbers::pi * static_cast<double>((k_mod * m) % n_pad) /
                                 static_cast<double>(n_pad);
            e(static_cast<Eigen::Index>(k - k_lo), static_cast<Eigen::Index>(m)) =
                w[m] * cplx(std::cos(phase), std::sin(phase));
        }
    }
    return e;
}

std::vector<double> frequency_grid(std::size_t n, double dt, const Window& window) {
    const std::size_t n_pad = padded_length(n, window);
    std::vector<double> w;
    for (std::ptrdiff_t k = lowest_bin(n_pad, window); k <= static_cast<std::ptrdiff_t>(n_pad / 2); ++k) {
        w.push_back(2.0 * std::numbers::pi * static_cast<double>(k) / (static_cast<double>(n_pad) * dt));
    }
    return w;
}

double uniform_step(const std::vector<double>& t) {
    if (t.size() < 2) throw DomainError("spectrum: need at least two samples");
    const double dt = t[1] - t[0];
    if (!(dt > 0.0)) throw DomainError("spectrum: time grid must increase");
    for (std::size_t i = 1; i < t.size(); ++i) {
        if (std::abs((t[i] - t[i - 1]) - dt) > 1e-9 * std::max(1.0, std::abs(t[i]))) {
            throw DomainError("spectrum: time grid is not uniform");
        }
    }
    return dt;
}

// Linear interpolation position of value v on a sorted, uniform grid.
double grid_index(const std::vector<double>& grid, double v) {
    const double step = grid[1] - grid[0];
    return (v - grid[0]) / step;
}

}  // namespace

CVector windowed_dft(std::span<const cplx> samples, const Window& window) {
    const std::size_t n = samples.size();
    const std::size_t n_pad = padded_length(n, window);
    const auto w = window_weights(n, window);
    CVector out(static_cast<Eigen::Index>(n_pad));
    for (std::size_t k = 0; k < n_pad; ++k) {
        cplx acc{0.0, 0.0};
        for (std::size_t m = 0; m < n; ++m) {
            const double phase = 2.0 * std::numbers::pi * static_cast<double>((k * m) % n_pad) /
                                 static_cast<double>(n_pad);
            acc += w[m] * samples[m] * cplx(std::cos(phase), std::sin(phase));
        }
        out(static_cast<Eigen::Index>(k)) = acc;
    }
    return out;
}

Spectrum1D absorption_spectrum(const CorrelationSeries& series, const Window& window) {
    if (series.times.size() != series.values.size()) {
        throw DomainError("spectrum: times and values differ in length");
    }
    const double dt = uniform_step(series.times);
    const std::size_t n = series.values.size();
    const CMatrix e = forward_kernel(n, window);
    const CVector r = Eigen::Map<const CVector>(series.values.data(), static_cast<Eigen::Index>(n));
    const CVector x = e * r * dt;
    Spectrum1D sp;
    sp.omega = frequency_grid(n, dt, window);
    sp.values.resize(sp.omega.size());
    for (std::size_t k = 0; k < sp.omega.size(); ++k) sp.values[k] = x(static_cast<Eigen::Index>(k)).real();
    return sp;
}

Spectrum2D spectrum_2d(const ResponseSet& rs, const Window& window) {
    const auto n1 = static_cast<std::size_t>(rs.r1.rows());
    const auto n3 = static_cast<std::size_t>(rs.r1.cols());
    for (const CMatrix* m : {&rs.r2, &rs.r3, &rs.r4}) {
        if (static_cast<std::size_t>(m->rows()) != n1 || static_cast<std::size_t>(m->cols()) != n3) {
            throw ShapeError("spectrum_2d: pathway grids differ in shape");
        }
    }
    if (n1 < 2 || n3 < 2 || !(rs.dt > 0.0)) throw DomainError("spectrum_2d: grid too small");
    const CMatrix e1 = forward_kernel(n1, window);
    const CMatrix e3 = forward_kernel(n3, window);
    const double area = rs.dt * rs.dt;
    Spectrum2D sp;
    sp.w_exc = frequency_grid(n1, rs.dt, window);
    sp.w_det = frequency_grid(n3, rs.dt, window);
    // rephasing evolves as e^{+i w t1} during the first delay, so its t1 kernel is conjugated
    sp.rephasing = e1.conjugate() * (rs.r2 + rs.r3) * e3.transpose() * area;
    sp.nonrephasing = e1 * (rs.r1 + rs.r4) * e3.transpose() * area;
    sp.total = sp.rephasing.real() + sp.nonrephasing.real();
    return sp;
}

std::vector<Peak> find_peaks(std::span<const double> x, std::span<const double> y, double prominence) {
    std::vector<Peak> peaks;
    const std::size_t n = y.size();
    if (n < 3 || x.size() != n) return peaks;
    const double top = *std::max_element(y.begin(), y.end());
    if (!(top > 0.0)) return peaks;
    const double threshold = prominence * top;
    for (std::size_t k = 1; k + 1 < n; ++k) {
        if (!(y[k] > y[k - 1] && y[k] >= y[k + 1]) || y[k] < threshold) continue;
        // topographic prominence: drop to the higher of the two bounding minima
        double left_min = y[k];
        std::size_t i = k;
        while (i > 0 && y[i - 1] <= y[k]) left_min = std::min(left_min, y[--i]);
        double right_min = y[k];
        std::size_t j = k;
        while (j + 1 < n && y[j + 1] <= y[k]) right_min = std::min(right_min, y[++j]);
        if (y[k] - std::max(left_min, right_min) < threshold) continue;
        const double a = y[k - 1];
        const double b = y[k];
        const double c = y[k + 1];
        const double denom = a - 2.0 * b + c;
        const double delta = denom != 0.0 ? 0.5 * (a - c) / denom : 0.0;
        const double step = x[k + 1] - x[k];
        peaks.push_back({x[k] + delta * step, b - 0.25 * (a - c) * delta});
    }
    std::sort(peaks.begin(), peaks.end(), [](const Peak& p, const Peak& q) { return p.height > q.height; });
    return peaks;
}

namespace {

void fill_pair_metrics(PeakReport& report) {
    if (report.diagonal_peaks.size() < 2) return;
    const Peak& a = report.diagonal_peaks[0];
    const Peak& b = report.diagonal_peaks[1];
    report.splitting = std::abs(a.position - b.position);
    const Peak& lower = a.position < b.position ? a : b;
    const Peak& upper = a.position < b.position ? b : a;
    report.amplitude_ratio = lower.height / upper.height;
}

}  // namespace

PeakReport peak_analysis(const Spectrum1D& sp, const PeakOptions& options) {
    PeakReport report;
    report.diagonal_peaks = find_peaks(sp.omega, sp.values, options.prominence);
    fill_pair_metrics(report);
    return report;
}

double interpolate_2d(const Spectrum2D& sp, double w_exc, double w_det) {
    const double fi = grid_index(sp.w_exc, w_exc);
    const double fj = grid_index(sp.w_det, w_det);
    const auto rows = sp.total.rows();
    const auto cols = sp.total.cols();
    if (fi < 0.0 || fj < 0.0 || fi > static_cast<double>(rows - 1) || fj > static_cast<double>(cols - 1)) {
        throw DomainError("interpolate_2d: point outside the frequency grid");
    }
    const auto i = std::min<Eigen::Index>(static_cast<Eigen::Index>(fi), rows - 2);
    const auto j = std::min<Eigen::Index>(static_cast<Eigen::Index>(fj), cols - 2);
    const double u = fi - static_cast<double>(i);
    const double v = fj - static_cast<double>(j);
    return (1 - u) * (1 - v) * sp.total(i, j) + u * (1 - v) * sp.total(i + 1, j) +
           (1 - u) * v * sp.total(i, j + 1) + u * v * sp.total(i + 1, j + 1);
}

Spectrum1D diagonal_slice(const Spectrum2D& sp) {
    Spectrum1D slice;
    const double hi = std::min(sp.w_exc.back(), sp.w_det.back());
    if (sp.w_exc.size() == sp.w_det.size() && sp.w_exc == sp.w_det) {
        slice.omega = sp.w_exc;
        for (Eigen::Index k = 0; k < sp.total.rows(); ++k) slice.values.push_back(sp.total(k, k));
        return slice;
    }
    const double step = std::min(sp.w_exc[1] - sp.w_exc[0], sp.w_det[1] - sp.w_det[0]);
    for (double w = 0.0; w <= hi; w += step) {
        slice.omega.push_back(w);
        slice.values.push_back(interpolate_2d(sp, w, w));
    }
    return slice;
}

PeakReport peak_analysis(const Spectrum2D& sp, const PeakOptions& options) {
    PeakReport report;
    const Spectrum1D slice = diagonal_slice(sp);
    report.diagonal_peaks = find_peaks(slice.omega, slice.values, options.prominence);
    fill_pair_metrics(report);
    if (report.diagonal_peaks.size() < 2) return report;

    // A cross-peak is a 2D local maximum within two bins of (w_a, w_b).
    const double top = sp.total.maxCoeff();
    auto local_max_near = [&](double we, double wd) {
        const auto ci = static_cast<Eigen::Index>(std::lround(grid_index(sp.w_exc, we)));
        const auto cj = static_cast<Eigen::Index>(std::lround(grid_index(sp.w_det, wd)));
        for (Eigen::Index i = std::max<Eigen::Index>(1, ci - 2); i <= std::min(sp.total.rows() - 2, ci + 2); ++i) {
            for (Eigen::Index j = std::max<Eigen::Index>(1, cj - 2); j <= std::min(sp.total.cols() - 2, cj + 2); ++j) {
                const double v = sp.total(i, j);
                if (v < options.prominence * top) continue;
                bool is_max = true;
                for (int di = -1; di <= 1 && is_max; ++di)
                    for (int dj = -1; dj <= 1; ++dj)
                        if ((di || dj) && sp.total(i + di, j + dj) > v) { is_max = false; break; }
                if (is_max) return true;
            }
        }
        return false;
    };
    const double a = report.diagonal_peaks[0].position;
    const double b = report.diagonal_peaks[1].position;
    report.cross_peaks_present = local_max_near(a, b) && local_max_near(b, a);
    return report;
}

PeakWidths peak_widths(const Spectrum2D& sp, double center) {
    const double step = 0.25 * (sp.w_exc[1] - sp.w_exc[0]);
    const double lo = std::max(sp.w_exc.front(), sp.w_det.front());
    const double hi = std::min(sp.w_exc.back(), sp.w_det.back());
    if (center <= lo || center >= hi) throw DomainError("peak_widths: center outside the grid");
    const double peak = interpolate_2d(sp, center, center);
    auto width = [&](int det_sign) {
        auto f = [&](double s) { return interpolate_2d(sp, center + s, center + det_sign * s); };
        auto inside = [&](double s) {
            const double we = center + s;
            const double wd = center + det_sign * s;
            return we >= lo && we <= hi && wd >= lo && wd <= hi;
        };
        double edges[2];
        for (int dir = 0; dir < 2; ++dir) {
            const double sgn = dir == 0 ? 1.0 : -1.0;
            double s = 0.0;
            double prev = peak;
            edges[dir] = 0.0;
            while (inside(sgn * (s + step))) {
                const double cur = f(sgn * (s + step));
                if (cur <= 0.5 * peak) {
                    edges[dir] = s + step * (prev - 0.5 * peak) / (prev - cur);
                    break;
                }
                s += step;
                prev = cur;
                edges[dir] = s;
            }
        }
        return edges[0] + edges[1];
    };
    return {width(+1), width(-1)};
}

}  // namespace ptspec

#pragma once

// Monte-Carlo BER sweep over schemes and SNR points with a per-point
// stopping rule, and its CSV report.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "ffeq/analysis.hpp"
#include "ffeq/harness/config.hpp"
#include "ffeq/harness/rng.hpp"
#include "ffeq/harness/simulate.hpp"
#include "ffeq/profile_io.hpp"

namespace ffeq::harness {

inline constexpr double kZ95 = 1.959963984540054;
inline constexpr const char* kCsvVersion = "ffeq-ber v1";

struct Series {
    Scheme scheme;
    Variant variant;
    std::string label() const { return series_label(scheme, variant); }
};

struct BerRow {
    std::string scheme;  // series label
    double snr_db = 0.0;
    double ber_simulated = 0.0;
    double ber_theoretical = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t bit_errors = 0;
    std::uint64_t bits_total = 0;
    std::uint64_t realizations = 0;
    double ci_95 = 0.0;  // half-width

    // Per channel realization, in realization order.
    std::vector<std::uint64_t> errors_per_realization;
    std::vector<std::uint64_t> bits_per_realization;
    std::vector<double> theory_per_realization;
};

struct BerReport {
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    FrameGrid grid;
    std::vector<BerRow> rows;
    double max_discarded_fraction = 0.0;

    const BerRow* find(const std::string& label, double snr_db) const {
        for (const auto& r : rows)
            if (r.scheme == label && std::abs(r.snr_db - snr_db) < 1e-9) return &r;
        return nullptr;
    }
};

inline std::vector<Series> sweep_series(const ExperimentConfig& cfg) {
    std::vector<Series> out;
    for (auto s : cfg.schemes) {
        out.push_back({s, Variant::Mmse});
        if (cfg.equalizer.one_tap_baseline) out.push_back({s, Variant::OneTap});
        if (cfg.csi.enabled) out.push_back({s, Variant::Imperfect});
    }
    return out;
}

/// Two-sided 95% Student-t quantile with df degrees of freedom.
inline double t95(std::size_t df) {
    static constexpr double table[] = {12.706204736, 4.302652730, 3.182446305, 2.776445105, 2.570581836,
                                       2.446911851, 2.364624252, 2.306004135, 2.262157163, 2.228138852};
    if (df == 0) return std::numeric_limits<double>::infinity();
    if (df <= 10) return table[df - 1];
    // Cornish-Fisher expansion around the normal quantile
    const double z = kZ95, z2 = z * z, v = static_cast<double>(df);
    return z + (z2 + 1.0) * z / (4.0 * v) + ((5.0 * z2 + 16.0) * z2 + 3.0) * z / (96.0 * v * v) +
           (((3.0 * z2 + 19.0) * z2 + 17.0) * z2 - 15.0) * z / (384.0 * v * v * v);
}

/// 95% half-width of the ratio estimate sum(e)/sum(b), treating each
/// realization as one cluster (bit errors within a frame are dependent).
inline double cluster_ci95(const std::vector<std::uint64_t>& errors, const std::vector<std::uint64_t>& bits) {
    const std::size_t r = errors.size();
    double e_sum = 0.0, b_sum = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
        e_sum += static_cast<double>(errors[i]);
        b_sum += static_cast<double>(bits[i]);
    }
    if (b_sum == 0.0) return 0.0;
    const double p = e_sum / b_sum;
    if (r < 2) return kZ95 * std::sqrt(p * (1.0 - p) / b_sum);
    double ss = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
        const double u = static_cast<double>(errors[i]) - p * static_cast<double>(bits[i]);
        ss += u * u;
    }
    const double var = static_cast<double>(r) / static_cast<double>(r - 1) * ss / (b_sum * b_sum);
    return t95(r - 1) * std::sqrt(var);
}

namespace detail {

struct PointState {
    std::vector<std::uint64_t> errors;
    std::vector<std::uint64_t> bits;
    std::vector<double> theory;
    std::vector<char> done;  // realization evaluated for this point
    std::uint64_t error_sum = 0;
    Index count = 0;
    bool stopped = false;
};

struct RealizationJob {
    std::uint64_t index = 0;
    std::vector<char> active;  // per point, fixed before the chunk starts
};

// Evaluates every active point for one channel draw; writes only the
// realization's own slots.
inline void run_realization(const ExperimentConfig& cfg, const TdlProfile* profile, const FrameGrid& grid,
                            const std::vector<Series>& series, const std::vector<double>& snr_db,
                            const RealizationJob& job, std::vector<PointState>& points, double& discarded) {
    const std::size_t n_snr = snr_db.size();
    const auto r = job.index;
    const PathSet paths = draw_paths(cfg, profile, grid, r);
    const ChannelOptions opt = channel_options(cfg, grid);

    for (std::size_t si = 0; si < cfg.schemes.size(); ++si) {
        const Scheme scheme = cfg.schemes[si];
        // points of this scheme that are active
        bool any = false, want_theory = false;
        for (std::size_t k = 0; k < series.size(); ++k) {
            if (series[k].scheme != scheme) continue;
            for (std::size_t j = 0; j < n_snr; ++j)
                if (job.active[k * n_snr + j]) {
                    any = true;
                    if (series[k].variant == Variant::Mmse && cfg.theory) want_theory = true;
                }
        }
        if (!any) continue;

        const SchemeChannel ch = prepare_channel(paths, grid, scheme, opt);
        discarded = std::max(discarded, ch.discarded_fraction);
        std::optional<ChannelAnalysis> theory;
        if (want_theory) theory.emplace(paths, grid, scheme);

        // Perturbed receiver views, one per SNR point.
        std::vector<std::vector<BlockChannel>> imperfect(n_snr);
        for (std::size_t k = 0; k < series.size(); ++k) {
            if (series[k].scheme != scheme || series[k].variant != Variant::Imperfect) continue;
            for (std::size_t j = 0; j < n_snr; ++j)
                if (job.active[k * n_snr + j]) {
                    auto rng = make_stream(cfg.seed, Stream::Csi, {r, si, j});
                    imperfect[j] = perturb_blocks(ch.blocks, std::pow(10.0, snr_db[j] / 10.0), cfg.csi.c, rng);
                }
        }

        for (Index f = 0; f < cfg.trials.frames_per_realization; ++f) {
            // Bits and noise are shared by every scheme and SNR point.
            auto bit_rng = make_stream(cfg.seed, Stream::Bits, {r, static_cast<std::uint64_t>(f)});
            auto noise_rng = make_stream(cfg.seed, Stream::Noise, {r, static_cast<std::uint64_t>(f)});
            const Bits bits = random_bits(bit_rng, bits_per_frame(grid));
            const ComplexVector unit = unit_noise(noise_rng, grid.MN());
            const TxFrames tx = modulate(scheme, map_bits(bits, grid), grid.L_cp);
            const auto clean = channel_output(paths, grid, ch, tx, cfg.propagation);

            for (std::size_t j = 0; j < n_snr; ++j) {
                const double gamma = std::pow(10.0, snr_db[j] / 10.0);
                std::optional<std::vector<ComplexVector>> rx;
                for (std::size_t k = 0; k < series.size(); ++k) {
                    if (series[k].scheme != scheme || !job.active[k * n_snr + j]) continue;
                    if (!rx) rx = add_noise(clean, unit, gamma);
                    EqualizerConfig eq;
                    eq.gamma_in = gamma;
                    eq.domain = cfg.equalizer.domain;
                    eq.banded = cfg.equalizer.banded;
                    eq.kind = series[k].variant == Variant::OneTap ? EqualizerKind::OneTap : EqualizerKind::Mmse;
                    const auto& view = series[k].variant == Variant::Imperfect ? imperfect[j] : ch.blocks;
                    auto& pt = points[k * n_snr + j];
                    pt.errors[r] += detect_errors(scheme, grid, view, *rx, eq, bits);
                    pt.bits[r] += bits.size();
                }
            }
        }
        for (std::size_t k = 0; k < series.size(); ++k) {
            if (series[k].scheme != scheme) continue;
            for (std::size_t j = 0; j < n_snr; ++j) {
                if (!job.active[k * n_snr + j]) continue;
                auto& pt = points[k * n_snr + j];
                pt.done[r] = 1;
                if (series[k].variant == Variant::Mmse && theory)
                    pt.theory[r] = theory->ber(std::pow(10.0, snr_db[j] / 10.0), kQamK);
            }
        }
    }
}

}  // namespace detail

/// Runs the configured sweep. Each (series, SNR) point stops after
/// max_realizations channel draws, or earlier once it has at least
/// min_realizations draws and target_bit_errors errors. Draws are processed
/// in chunks; the stopping test runs between chunks, so the result does not
/// depend on the thread count.
inline BerReport run_ber_sweep(const ExperimentConfig& cfg) {
    const FrameGrid grid = derive_grid(cfg);
    std::optional<TdlProfile> profile;
    if (!cfg.awgn()) profile = load_profile_by_name(cfg.profile, cfg.profile_dir);
    const auto series = sweep_series(cfg);
    const auto snr_db = cfg.snr.points();
    const std::size_t n_snr = snr_db.size();
    const auto max_r = static_cast<std::size_t>(cfg.trials.max_realizations);

    std::vector<detail::PointState> points(series.size() * n_snr);
    for (auto& p : points) {
        p.errors.assign(max_r, 0);
        p.bits.assign(max_r, 0);
        p.theory.assign(max_r, std::numeric_limits<double>::quiet_NaN());
        p.done.assign(max_r, 0);
    }

    double discarded = 0.0;
    std::mutex discarded_mutex;
    const unsigned threads = std::max(1u, cfg.threads);

    for (std::size_t start = 0; start < max_r; start += static_cast<std::size_t>(cfg.trials.chunk)) {
        std::vector<char> active(points.size());
        bool any = false;
        for (std::size_t i = 0; i < points.size(); ++i) {
            active[i] = !points[i].stopped;
            any = any || active[i];
        }
        if (!any) break;
        const std::size_t stop = std::min(max_r, start + static_cast<std::size_t>(cfg.trials.chunk));

        std::atomic<std::size_t> next{start};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        auto worker = [&] {
            double local = 0.0;
            for (;;) {
                const std::size_t r = next.fetch_add(1);
                if (r >= stop) break;
                try {
                    detail::run_realization(cfg, profile ? &*profile : nullptr, grid, series, snr_db,
                                            {static_cast<std::uint64_t>(r), active}, points, local);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next = stop;
                }
            }
            std::lock_guard<std::mutex> lock(discarded_mutex);
            discarded = std::max(discarded, local);
        };
        const unsigned n_workers = static_cast<unsigned>(std::min<std::size_t>(threads, stop - start));
        if (n_workers <= 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (unsigned t = 0; t < n_workers; ++t) pool.emplace_back(worker);
            for (auto& t : pool) t.join();
        }
        if (failure) std::rethrow_exception(failure);

        for (std::size_t i = 0; i < points.size(); ++i) {
            auto& p = points[i];
            if (!active[i]) continue;
            for (std::size_t r = start; r < stop; ++r) p.error_sum += p.errors[r];
            p.count += static_cast<Index>(stop - start);
            const bool enough_errors = cfg.trials.target_bit_errors > 0 &&
                                       p.error_sum >= static_cast<std::uint64_t>(cfg.trials.target_bit_errors) &&
                                       p.count >= cfg.trials.min_realizations;
            if (p.count >= cfg.trials.max_realizations || enough_errors) p.stopped = true;
        }
    }

    BerReport rep;
    rep.config_hash = config_hash(cfg);
    rep.seed = cfg.seed;
    rep.grid = grid;
    rep.max_discarded_fraction = discarded;
    for (std::size_t k = 0; k < series.size(); ++k)
        for (std::size_t j = 0; j < n_snr; ++j) {
            const auto& p = points[k * n_snr + j];
            BerRow row;
            row.scheme = series[k].label();
            row.snr_db = snr_db[j];
            double theory_sum = 0.0;
            bool theory_ok = true;
            for (std::size_t r = 0; r < max_r; ++r) {
                if (!p.done[r]) continue;
                row.errors_per_realization.push_back(p.errors[r]);
                row.bits_per_realization.push_back(p.bits[r]);
                row.theory_per_realization.push_back(p.theory[r]);
                row.bit_errors += p.errors[r];
                row.bits_total += p.bits[r];
                if (std::isnan(p.theory[r])) theory_ok = false;
                theory_sum += p.theory[r];
            }
            row.realizations = row.errors_per_realization.size();
            row.ber_simulated =
                row.bits_total ? static_cast<double>(row.bit_errors) / static_cast<double>(row.bits_total) : 0.0;
            if (theory_ok && row.realizations > 0) row.ber_theoretical = theory_sum / static_cast<double>(row.realizations);
            row.ci_95 = cluster_ci95(row.errors_per_realization, row.bits_per_realization);
            rep.rows.push_back(std::move(row));
        }
    return rep;
}

namespace detail {

inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

}  // namespace detail

/// A comment line with the schema version, config hash and seed, then the
/// header row, then one row per (series, SNR). LF line endings.
inline void write_csv(const BerReport& rep, std::ostream& out) {
    char head[128];
    std::snprintf(head, sizeof head, "# %s config_hash=%016llx seed=%llu\n", kCsvVersion,
                  static_cast<unsigned long long>(rep.config_hash), static_cast<unsigned long long>(rep.seed));
    out << head;
    out << "scheme,snr_db,ber_simulated,ber_theoretical,bit_errors,bits_total,realizations,ci_95\n";
    for (const auto& r : rep.rows)
        out << r.scheme << ',' << detail::format_number(r.snr_db) << ',' << detail::format_number(r.ber_simulated) << ','
            << detail::format_number(r.ber_theoretical) << ',' << r.bit_errors << ',' << r.bits_total << ','
            << r.realizations << ',' << detail::format_number(r.ci_95) << '\n';
}

inline void write_csv(const BerReport& rep, const std::filesystem::path& file) {
    if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary);
    if (!out) throw Error("cannot write " + file.string());
    write_csv(rep, out);
}

}  // namespace ffeq::harness

#pragma once

// Sweep commands of the workbench. Each builder returns the tables it would
// write; run_command writes them (and optional SVG charts) to the output
// directory.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "sta/config.hpp"
#include "sta/csv.hpp"
#include "sta/geometry.hpp"
#include "sta/svg_plot.hpp"
#include "sta/units.hpp"
#include "sta/virtual_lab.hpp"
#include "sta/work_stats.hpp"

namespace sta {

/// Evaluates fn(0..n-1) on up to `workers` threads; results come back in
/// index order whatever the scheduling. The first exception is rethrown.
template <class Fn>
auto parallel_map(std::size_t n, int workers, Fn&& fn) -> std::vector<decltype(fn(std::size_t{}))> {
    using R = decltype(fn(std::size_t{}));
    std::vector<std::optional<R>> slots(n);
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    const auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                slots[i].emplace(fn(i));
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next = n;
            }
        }
    };
    const int count = std::max(1, std::min<int>(workers, static_cast<int>(n)));
    if (count == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < count; ++w) pool.emplace_back(work);
    }
    if (error) std::rethrow_exception(error);
    std::vector<R> out;
    out.reserve(n);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

struct OutputFile {
    std::string name;  // file name without directory, .csv included
    CsvTable table;
};

struct CommandOptions {
    bool plot{false};
    int workers{1};
};

namespace detail {

inline std::uint64_t cell_seed(std::uint64_t seed, std::size_t a, std::size_t b, std::size_t c) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(c)};
    std::uint32_t words[2];
    seq.generate(words, words + 2);
    return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

inline std::vector<double> tau_m_grid(double T, double step) {
    std::vector<double> out;
    const auto n = static_cast<long long>(std::floor(T / step + 1e-9));
    for (long long k = 0; k <= n; ++k) out.push_back(static_cast<double>(k) * step);
    return out;
}

inline double mhz(double w) { return units::rad_per_ns_to_mhz(w); }

}  // namespace detail

inline std::vector<OutputFile> build_fields(const RunConfig& cfg, int workers = 1) {
    return parallel_map(cfg.operation_times_ns.size(), workers, [&](std::size_t i) {
        const double T = cfg.operation_times_ns[i];
        const auto sch = cfg.schedule(T);
        CsvTable t({"t_ns", "b0x", "b0y", "b0z", "bcdx", "bcdy", "bcdz", "bx", "by", "bz"});
        for (double tb : reduced_time_grid(cfg.field_step_tbar)) {
            const double time = tb * T;
            const auto b0 = reference_field(sch, time);
            const auto bcd = cd_field_analytic(sch, time);
            const auto b = b0 + bcd;
            t.add_row(std::vector<double>{time, detail::mhz(b0.bx), detail::mhz(b0.by), detail::mhz(b0.bz),
                                          detail::mhz(bcd.bx), detail::mhz(bcd.by), detail::mhz(bcd.bz),
                                          detail::mhz(b.bx), detail::mhz(b.by), detail::mhz(b.bz)});
        }
        return OutputFile{"fields_T" + time_label(T) + ".csv", std::move(t)};
    });
}

inline std::vector<OutputFile> build_eigenenergies(const RunConfig& cfg, int workers = 1) {
    struct Cell {
        std::size_t ti;
        std::size_t k;
        double tau;
    };
    std::vector<Cell> cells;
    for (std::size_t ti = 0; ti < cfg.operation_times_ns.size(); ++ti) {
        const auto grid = detail::tau_m_grid(cfg.operation_times_ns[ti], cfg.tau_m_step_ns);
        for (std::size_t k = 0; k < grid.size(); ++k) cells.push_back({ti, k, grid[k]});
    }
    const auto diss = cfg.dissipation();
    const auto rows = parallel_map(cells.size(), workers, [&](std::size_t i) {
        const auto& c = cells[i];
        const auto sch = cfg.schedule(cfg.operation_times_ns[c.ti]);
        auto rec = frozen_hamiltonian_run(sch, c.tau, cfg.propagator(), diss);
        if (cfg.shot_noise_enabled) ShotNoise(cfg.shots, detail::cell_seed(cfg.seed, 1, c.ti, c.k)).apply(rec);
        const double exact = detail::mhz(total_eigenbasis(sch, c.tau).e_plus);
        try {
            const auto fit = extract_eigenenergies(rec);
            return std::vector<std::string>{format_number(c.tau), format_number(detail::mhz(fit.e_plus)),
                                            format_number(detail::mhz(fit.e_minus)), format_number(exact),
                                            format_number(fit.residual_rms), "ok"};
        } catch (const FitFailure&) {
            return std::vector<std::string>{format_number(c.tau), "nan", "nan", format_number(exact), "nan",
                                            "fit_failure"};
        }
    });
    std::vector<OutputFile> out;
    for (std::size_t ti = 0; ti < cfg.operation_times_ns.size(); ++ti) {
        CsvTable t({"tau_m_ns", "e_plus_mhz", "e_minus_mhz", "e_plus_exact_mhz", "fit_residual", "status"});
        for (std::size_t i = 0; i < cells.size(); ++i)
            if (cells[i].ti == ti) t.add_row(rows[i]);
        out.push_back({"eigenenergies_T" + time_label(cfg.operation_times_ns[ti]) + ".csv", std::move(t)});
    }
    return out;
}

inline std::vector<OutputFile> build_populations(const RunConfig& cfg, int workers = 1) {
    const auto grid = reduced_time_grid(cfg.grid_step_tbar);
    const std::size_t per_t = 2 * grid.size();
    const std::size_t total = cfg.operation_times_ns.size() * per_t;
    const auto diss = cfg.dissipation();
    const auto rows = parallel_map(total, workers, [&](std::size_t i) {
        const std::size_t ti = i / per_t;
        const std::size_t ni = (i % per_t) / grid.size();
        const std::size_t k = i % grid.size();
        const Level n = ni == 0 ? Level::up : Level::down;
        const double T = cfg.operation_times_ns[ti];
        const auto sch = cfg.schedule(T);
        const double tau = grid[k] * T;
        auto r = frozen_population_run(sch, tau, n, cfg.drag_time_ns, cfg.propagator(), diss);
        if (cfg.shot_noise_enabled) ShotNoise(cfg.shots, detail::cell_seed(cfg.seed, 2 + ni, ti, k)).apply(r);
        const auto exact = conditional_probs(sch, tau, n, cfg.propagator());
        return std::vector<double>{tau, r.p_plus_given_n, r.p_minus_given_n, exact.p_plus, exact.p_minus};
    });
    std::vector<OutputFile> out;
    for (std::size_t ti = 0; ti < cfg.operation_times_ns.size(); ++ti) {
        for (std::size_t ni = 0; ni < 2; ++ni) {
            CsvTable t({"tau_m_ns", "p_plus", "p_minus", "p_plus_exact", "p_minus_exact"});
            for (std::size_t k = 0; k < grid.size(); ++k) t.add_row(rows[ti * per_t + ni * grid.size() + k]);
            out.push_back({"populations_T" + time_label(cfg.operation_times_ns[ti]) + "_" +
                               to_string(ni == 0 ? Level::up : Level::down) + ".csv",
                           std::move(t)});
        }
    }
    return out;
}

inline std::vector<OutputFile> build_moments(const RunConfig& cfg, int workers = 1) {
    const auto grid = reduced_time_grid(cfg.grid_step_tbar);
    const auto diss = cfg.dissipation();
    return parallel_map(2 * cfg.operation_times_ns.size(), workers, [&](std::size_t i) {
        const double T = cfg.operation_times_ns[i / 2];
        const Level n = i % 2 == 0 ? Level::up : Level::down;
        CsvTable t({"tbar", "w1_hmhz", "w2_hmhz2", "w1_ad", "w2_ad", "excess2"});
        for (const auto& r : moment_curve(cfg.schedule(T), n, grid, cfg.propagator(), diss))
            t.add_row(std::vector<double>{r.tbar, units::energy_to_hmhz(r.w1), units::energy2_to_hmhz2(r.w2),
                                          units::energy_to_hmhz(r.w1_ad), units::energy2_to_hmhz2(r.w2_ad),
                                          units::energy2_to_hmhz2(r.excess2)});
        return OutputFile{"moments_T" + time_label(T) + "_" + to_string(n) + ".csv", std::move(t)};
    });
}

inline constexpr double kEmpiricalReferenceTime = 500.0;  // ns

/// T2_excess2 is T²·δW² in units of hbar², directly comparable with the
/// dimensionless (dl/dt~)² columns.
inline std::vector<OutputFile> build_qgt(const RunConfig& cfg, int workers = 1) {
    const auto grid = reduced_time_grid(cfg.grid_step_tbar);
    const auto diss = cfg.dissipation();
    const auto pcfg = cfg.propagator();
    const auto ref_curve = moment_curve(cfg.schedule(kEmpiricalReferenceTime), Level::up, grid, pcfg, diss);
    return parallel_map(cfg.operation_times_ns.size(), workers, [&](std::size_t i) {
        const double T = cfg.operation_times_ns[i];
        const auto sch = cfg.schedule(T);
        const auto curve = moment_curve(sch, Level::up, grid, pcfg, diss);
        const auto traj = bloch_trajectory(sch, pcfg, cfg.grid_step_tbar, diss, Level::up);
        const auto est = geometric_quantity_estimator(traj, cfg.grid_step_tbar);
        CsvTable t({"tbar", "T2_excess2", "dl_dt_sq_estimator", "dl_dt_sq_analytic", "theta_q", "phi_q",
                    "T2_excess2_ref500"});
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const double estimator = (k == 0 || k + 1 == grid.size()) ? std::nan("") : est[k - 1].value;
            t.add_row(std::vector<double>{grid[k], T * T * curve[k].excess2, estimator,
                                          path_speed_sq(sch, grid[k]), traj[k].theta_q, traj[k].phi_q,
                                          T * T * (curve[k].w2 - ref_curve[k].w2)});
        }
        return OutputFile{"qgt_T" + time_label(T) + ".csv", std::move(t)};
    });
}

inline std::vector<OutputFile> build_command(const std::string& name, const RunConfig& cfg, int workers) {
    if (name == "fields") return build_fields(cfg, workers);
    if (name == "eigenenergies") return build_eigenenergies(cfg, workers);
    if (name == "populations") return build_populations(cfg, workers);
    if (name == "moments") return build_moments(cfg, workers);
    if (name == "qgt") return build_qgt(cfg, workers);
    throw ConfigError("unknown command '" + name + "'");
}

/// STA_OUTPUT_DIR, when set and non-empty, replaces output_dir.
inline std::filesystem::path output_directory(const RunConfig& cfg) {
    if (const char* env = std::getenv("STA_OUTPUT_DIR"); env && *env) return env;
    return cfg.output_dir;
}

inline std::vector<std::filesystem::path> write_outputs(const std::vector<OutputFile>& files,
                                                        const std::filesystem::path& dir, bool plot) {
    ensure_directory(dir);
    std::vector<std::filesystem::path> written;
    for (const auto& f : files) {
        const auto path = dir / f.name;
        f.table.write(path);
        written.push_back(path);
        if (plot) {
            auto svg = path;
            svg.replace_extension(".svg");
            write_svg(svg, f.table, f.name);
            written.push_back(svg);
        }
    }
    return written;
}

}  // namespace sta

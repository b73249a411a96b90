#pragma once

// Latency comparison between the offline linker and a simulated API-backed
// linker. The simulated backend runs the same pipeline and sleeps at the end
// of the candidate and type stages, standing in for a remote search call and
// a remote type query. Answers are compared mention by mention.

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "tablink/kb_model.hpp"
#include "tablink/linker.hpp"

namespace tablink {

struct BenchOptions {
    // Per-mention delays for the candidate and type stages, in seconds
    // before scaling.
    double online_candidate_latency = 12.0;
    double online_type_latency = 18.0;
    double scale = 0.001;
    std::uint64_t projection_tables = 120000;
    std::uint64_t projection_cells_per_table = 10;
    std::size_t warmup = 5;
};

struct StageMedians {
    double candidates = 0.0;
    double types = 0.0;
    double scoring = 0.0;
    double total = 0.0;  // median of per-mention totals, seconds
};

struct BackendReport {
    std::string name;
    StageMedians median;
    std::size_t mentions = 0;
    std::size_t errors = 0;
    double projection_days = 0.0;
};

struct LatencyReport {
    BackendReport offline;
    BackendReport online;
    double speedup = 0.0;  // online.median.total / offline.median.total
    double nominal_online_projection_days = 0.0;  // unscaled latencies
    bool answers_identical = true;
};

inline double project_corpus_days(std::uint64_t tables, std::uint64_t cells_per_table, double seconds_per_mention) {
    return static_cast<double>(tables) * static_cast<double>(cells_per_table) * seconds_per_mention / 86400.0;
}

namespace detail {

class TimingObserver final : public StageObserver {
public:
    using Clock = std::chrono::steady_clock;

    TimingObserver(double candidate_delay, double type_delay) : candidate_delay_(candidate_delay), type_delay_(type_delay) {}

    void start() { marks_[0] = Clock::now(); }

    void stage_done(LinkStage stage) override {
        const double delay = stage == LinkStage::candidates ? candidate_delay_
                             : stage == LinkStage::types    ? type_delay_
                                                            : 0.0;
        if (delay > 0.0) std::this_thread::sleep_for(std::chrono::duration<double>(delay));
        marks_[static_cast<std::size_t>(stage) + 1] = Clock::now();
    }

    double seconds(std::size_t from, std::size_t to) const {
        return std::chrono::duration<double>(marks_[to] - marks_[from]).count();
    }

private:
    double candidate_delay_;
    double type_delay_;
    std::array<Clock::time_point, 4> marks_{};
};

inline double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct BackendRun {
    BackendReport report;
    std::vector<std::optional<LinkResult>> results;
};

inline BackendRun run_backend(const Linker& linker, std::span<const LinkRequest> mentions, std::string name,
                              double candidate_delay, double type_delay, const BenchOptions& options) {
    BackendRun run;
    run.report.name = std::move(name);
    detail::TimingObserver obs(candidate_delay, type_delay);
    for (std::size_t i = 0; i < std::min(options.warmup, mentions.size()); ++i) {
        try {
            (void)linker.link(mentions[i]);
        } catch (const Error&) {
        }
    }
    std::vector<double> cand, types, scoring, total;
    for (const auto& req : mentions) {
        obs.start();
        try {
            run.results.push_back(linker.link(req, &obs));
        } catch (const Error&) {
            ++run.report.errors;
            run.results.emplace_back();
            continue;
        }
        cand.push_back(obs.seconds(0, 1));
        types.push_back(obs.seconds(1, 2));
        scoring.push_back(obs.seconds(2, 3));
        total.push_back(obs.seconds(0, 3));
    }
    run.report.mentions = total.size();
    run.report.median = {median(cand), median(types), median(scoring), median(total)};
    run.report.projection_days =
        project_corpus_days(options.projection_tables, options.projection_cells_per_table, run.report.median.total);
    return run;
}

}  // namespace detail

inline LatencyReport bench(const Linker& linker, std::span<const LinkRequest> mentions, const BenchOptions& options = {}) {
    LatencyReport report;
    auto offline = detail::run_backend(linker, mentions, "offline", 0.0, 0.0, options);
    auto online = detail::run_backend(linker, mentions, "simulated_online", options.online_candidate_latency * options.scale,
                                      options.online_type_latency * options.scale, options);
    report.answers_identical = offline.results == online.results;
    report.offline = std::move(offline.report);
    report.online = std::move(online.report);
    report.speedup = report.offline.median.total > 0.0 ? report.online.median.total / report.offline.median.total : 0.0;
    report.nominal_online_projection_days =
        project_corpus_days(options.projection_tables, options.projection_cells_per_table,
                            options.online_candidate_latency + options.online_type_latency);
    return report;
}

inline ordered_json latency_report_to_json(const LatencyReport& r) {
    auto backend = [](const BackendReport& b) {
        return ordered_json{{"name", b.name},
                            {"mentions", b.mentions},
                            {"errors", b.errors},
                            {"median_seconds",
                             ordered_json{{"candidates", b.median.candidates},
                                          {"types", b.median.types},
                                          {"scoring", b.median.scoring},
                                          {"total", b.median.total}}},
                            {"projection_days", b.projection_days}};
    };
    return ordered_json{{"offline", backend(r.offline)},
                        {"simulated_online", backend(r.online)},
                        {"speedup", r.speedup},
                        {"nominal_online_projection_days", r.nominal_online_projection_days},
                        {"answers_identical", r.answers_identical}};
}

}  // namespace tablink

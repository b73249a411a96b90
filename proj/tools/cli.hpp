#pragma once

// The tablink command line. run() is kept separate from main() so tests can
// drive it in-process with their own streams.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tablink/bench.hpp"
#include "tablink/candidate_index.hpp"
#include "tablink/dump_ingest.hpp"
#include "tablink/error.hpp"
#include "tablink/eval.hpp"
#include "tablink/hash.hpp"
#include "tablink/kb_model.hpp"
#include "tablink/link_cache.hpp"
#include "tablink/linker.hpp"
#include "tablink/synthetic.hpp"
#include "tablink/table_linker.hpp"
#include "tablink/type_store.hpp"

#ifndef TABLINK_VERSION
#define TABLINK_VERSION "0.0.0"
#endif

namespace tablink::cli {

namespace fs = std::filesystem;

struct RunManifest {
    std::string subcommand;
    std::optional<std::string> config_hash;
    std::optional<std::string> index_build_id;
    std::optional<std::string> closure_hash;
    std::string version = TABLINK_VERSION;
    double wall_time_seconds = 0.0;
};

inline ordered_json manifest_to_json(const RunManifest& m) {
    auto opt = [](const std::optional<std::string>& s) { return s ? ordered_json(*s) : ordered_json(nullptr); };
    return ordered_json{{"subcommand", m.subcommand},
                        {"config_hash", opt(m.config_hash)},
                        {"index_build_id", opt(m.index_build_id)},
                        {"closure_hash", opt(m.closure_hash)},
                        {"version", m.version},
                        {"wall_time_seconds", m.wall_time_seconds}};
}

inline std::string version_text() {
    std::ostringstream os;
    os << "tablink " << TABLINK_VERSION << "\n"
       << "index format " << CandidateIndex::kFormatVersion << "\n"
       << "normalization " << text::kNormalizationVersion << "\n"
       << "stopwords " << text::kStopwordVersion << "\n";
    return os.str();
}

namespace detail {

// Writes payload to path, or to out when path is empty or "-".
inline void emit(const std::string& path, const std::string& payload, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << payload;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path);
    f << payload;
    if (!f) throw IoError("write error on " + path);
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, ',')) {
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

inline std::vector<std::string> read_lines(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) out.push_back(line);
    }
    return out;
}

// Sorted *.json files of a directory, or the path itself if it is a file.
inline std::vector<fs::path> json_inputs(const fs::path& p) {
    std::vector<fs::path> out;
    if (fs::is_directory(p)) {
        for (const auto& e : fs::directory_iterator(p)) {
            const auto ext = e.path().extension();
            if (e.is_regular_file() && (ext == ".json" || ext == ".csv")) out.push_back(e.path());
        }
        std::sort(out.begin(), out.end());
    } else if (fs::exists(p)) {
        out.push_back(p);
    } else {
        throw IoError("no such file or directory: " + p.string());
    }
    return out;
}

// Index, closure and config loaded together for linking subcommands.
struct Kb {
    CandidateIndex index;
    TypeClosure closure;
    ValidatedConfig config;
    std::string closure_hash;

    Kb(const std::string& index_dir, const std::string& closure_path, const std::string& config_path)
        : index(CandidateIndex::load(index_dir)),
          closure(read_closure(fs::path(closure_path))),
          config(validate_config(read_config(config_path))),
          closure_hash(sha256_file(closure_path)) {}

    void describe(RunManifest& m) const {
        m.config_hash = config.content_hash();
        m.index_build_id = index.build_id();
        m.closure_hash = closure_hash;
    }
};

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    const auto started = std::chrono::steady_clock::now();
    CLI::App app{"Offline entity linking for scientific tables", "tablink"};
    app.require_subcommand(0, 1);
    app.fallthrough();
    bool show_version = false;
    std::string manifest_path;
    app.add_flag("--version", show_version, "Print artifact and format versions");
    app.add_option("--manifest", manifest_path, "Write the run manifest here instead of standard error");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Extract item records and type edges from an entity dump");
    std::string dump_path, out_records, out_edges, watchlist;
    unsigned jobs = 1;
    ingest->add_option("--dump", dump_path, "Dump file, one entity document per line")->required();
    ingest->add_option("--out-records", out_records)->required();
    ingest->add_option("--out-edges", out_edges)->required();
    ingest->add_option("--watchlist", watchlist, "Comma-separated property ids to flag, e.g. P486");
    ingest->add_option("--jobs", jobs)->check(CLI::PositiveNumber);

    // closure
    auto* closure = app.add_subcommand("closure", "Compute the transitive type closure of an edge file");
    std::string edges_path, records_path, out_path;
    closure->add_option("--edges", edges_path)->required();
    closure->add_option("--records", records_path, "Also include every direct type of these records");
    closure->add_option("--out", out_path);

    // build-index
    auto* build_index = app.add_subcommand("build-index", "Build the candidate index directory");
    double partial_gate = IndexOptions{}.partial_gate;
    build_index->add_option("--records", records_path)->required();
    build_index->add_option("--out", out_path)->required();
    build_index->add_option("--partial-gate", partial_gate)->check(CLI::Range(0.0, 1.0));

    // shared KB flags
    std::string index_dir, closure_path, config_path;
    auto kb_flags = [&](CLI::App* sub) {
        sub->add_option("--index", index_dir)->required();
        sub->add_option("--closure", closure_path)->required();
        sub->add_option("--config", config_path)->required();
    };

    // link
    auto* link = app.add_subcommand("link", "Link one mention");
    std::string mention, mode = "cell", context, expect, cache_dir;
    bool has_context = false;
    link->add_option("--mention", mention)->required();
    link->add_option("--mode", mode)->check(CLI::IsMember({"cell", "header"}));
    link->add_option("--context", context)->each([&](const std::string&) { has_context = true; });
    link->add_option("--expect", expect, "Comma-separated expected type names");
    link->add_option("--cache", cache_dir, "Persistent cache directory");
    kb_flags(link);

    // link-table
    auto* link_table_cmd = app.add_subcommand("link-table", "Annotate a table, or every table in a directory");
    std::string table_path;
    bool has_header = false;
    link_table_cmd->add_option("--table", table_path, "Table file (.json or .csv) or directory")->required();
    link_table_cmd->add_flag("--has-header", has_header, "CSV input has a header row");
    link_table_cmd->add_option("--out", out_path, "Output file, or directory when --table is a directory");
    link_table_cmd->add_option("--jobs", jobs)->check(CLI::PositiveNumber);
    link_table_cmd->add_option("--cache", cache_dir, "Persistent cache directory");
    kb_flags(link_table_cmd);

    // eval
    auto* eval = app.add_subcommand("eval", "Score annotations against gold records");
    std::string annotations_path, gold_path;
    eval->add_option("--annotations", annotations_path, "Annotation file or directory")->required();
    eval->add_option("--gold", gold_path)->required();
    eval->add_option("--out", out_path);

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "Compare offline and simulated online latency");
    std::string mentions_path, online_latency = "12,18";
    BenchOptions bench_options;
    bench_cmd->add_option("--mentions", mentions_path, "One mention per line")->required();
    bench_cmd->add_option("--online-latency", online_latency, "Candidate and type stage delays, before scaling");
    bench_cmd->add_option("--scale", bench_options.scale);
    bench_cmd->add_option("--tables", bench_options.projection_tables);
    bench_cmd->add_option("--cells-per-table", bench_options.projection_cells_per_table);
    bench_cmd->add_option("--out", out_path);
    kb_flags(bench_cmd);

    // gen-kb
    auto* gen = app.add_subcommand("gen-kb", "Generate a synthetic knowledge base with gold tables");
    SyntheticSpec spec;
    gen->add_option("--seed", spec.seed);
    gen->add_option("--items", spec.n_items);
    gen->add_option("--types", spec.n_types);
    gen->add_option("--tables", spec.n_tables);
    gen->add_option("--rows", spec.rows_per_table)->check(CLI::Range(2, 1000));
    gen->add_option("--mentions", spec.n_mentions);
    gen->add_option("--out", out_path, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        if (code != 0 && dynamic_cast<const CLI::ExtrasError*>(&e)) err << app.help();
        return code == 0 ? 0 : 1;
    }
    if (show_version) {
        out << version_text();
        return 0;
    }
    CLI::App* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front();
    if (sub == nullptr) {
        err << "a subcommand is required\n" << app.help();
        return 1;
    }

    RunManifest manifest;
    manifest.subcommand = sub->get_name();
    try {
        if (sub == ingest) {
            IngestOptions options;
            for (const auto& p : detail::split_list(watchlist)) {
                auto id = EntityId::parse(p);
                if (!id.is_property()) throw ValidationError("watchlist entry " + p + " is not a property id");
                options.watchlist.insert(id);
            }
            options.jobs = jobs;
            const auto stats = ingest_dump(fs::path(dump_path), fs::path(out_records), fs::path(out_edges), options);
            out << stats_to_json(stats).dump(2) << '\n';
        } else if (sub == closure) {
            const auto edges = read_edges(edges_path);
            std::vector<EntityId> extra;
            if (!records_path.empty()) {
                for (const auto& r : read_records(records_path)) {
                    extra.insert(extra.end(), r.direct_types.begin(), r.direct_types.end());
                }
            }
            const auto built = build_closure(edges, extra);
            if (!built.rejected.empty()) err << "skipped " << built.rejected.size() << " ill-kinded edges\n";
            std::ostringstream os;
            write_closure(os, built.closure);
            detail::emit(out_path, os.str(), out);
            manifest.closure_hash = sha256_hex(os.str());
        } else if (sub == build_index) {
            IndexOptions options;
            options.partial_gate = partial_gate;
            const auto idx = CandidateIndex::build_from_file(records_path, options);
            idx.save(out_path);
            if (idx.duplicate_count() > 0) err << "replaced " << idx.duplicate_count() << " duplicate records\n";
            manifest.index_build_id = idx.build_id();
            out << idx.manifest().dump(2) << '\n';
        } else if (sub == link) {
            const detail::Kb kb(index_dir, closure_path, config_path);
            kb.describe(manifest);
            const Linker linker(kb.index, kb.closure, kb.config, std::make_shared<LexicalCosineScorer>(),
                                kb.closure_hash);
            LinkRequest req;
            req.mention = mention;
            req.mode = parse_link_mode(mode);
            if (has_context) req.context = context;
            req.expected_types = detail::split_list(expect);
            LinkResult result;
            if (!cache_dir.empty()) {
                LinkCache cache(cache_dir);
                result = CachedLinker(linker, cache).link(req);
                if (cache.stats().io_failures > 0) err << "cache directory unusable; continuing without persistence\n";
            } else {
                result = linker.link(req);
            }
            out << link_result_to_json(result).dump(2) << '\n';
        } else if (sub == link_table_cmd) {
            const detail::Kb kb(index_dir, closure_path, config_path);
            kb.describe(manifest);
            const Linker linker(kb.index, kb.closure, kb.config, std::make_shared<LexicalCosineScorer>(),
                                kb.closure_hash);
            std::optional<LinkCache> cache;
            if (!cache_dir.empty()) cache.emplace(cache_dir);
            TableLinkOptions options;
            options.jobs = jobs;
            options.cache = cache ? &*cache : nullptr;
            if (fs::is_directory(table_path)) {
                if (out_path.empty()) throw ValidationError("--out <dir> is required when --table is a directory");
                std::error_code ec;
                fs::create_directories(out_path, ec);
                if (ec) throw IoError("cannot create " + out_path + ": " + ec.message());
                for (const auto& p : detail::json_inputs(table_path)) {
                    const auto ann = link_table(read_table(p, has_header), linker, options);
                    detail::emit((fs::path(out_path) / (ann.table_id + ".json")).string(),
                                 annotation_to_json(ann).dump(2) + "\n", out);
                }
            } else {
                const auto ann = link_table(read_table(table_path, has_header), linker, options);
                detail::emit(out_path, annotation_to_json(ann).dump(2) + "\n", out);
            }
        } else if (sub == eval) {
            std::vector<TableAnnotation> annotations;
            for (const auto& p : detail::json_inputs(annotations_path)) {
                std::ifstream in(p);
                if (!in) throw IoError("cannot open " + p.string());
                try {
                    annotations.push_back(annotation_from_json(json::parse(in)));
                } catch (const json::parse_error& e) {
                    throw ParseError(p.string() + ": " + e.what());
                }
            }
            const auto gold = read_gold(gold_path);
            const auto report = evaluate(annotations, gold);
            if (report.undefined) err << "no gold cell expects an entity; metrics reported as 0\n";
            detail::emit(out_path, eval_report_to_json(report).dump(2) + "\n", out);
        } else if (sub == bench_cmd) {
            const auto delays = detail::split_list(online_latency);
            if (delays.size() != 2) throw ValidationError("--online-latency expects two values, e.g. 12,18");
            try {
                bench_options.online_candidate_latency = std::stod(delays[0]);
                bench_options.online_type_latency = std::stod(delays[1]);
            } catch (const std::exception&) {
                throw ValidationError("--online-latency values must be numbers");
            }
            const detail::Kb kb(index_dir, closure_path, config_path);
            kb.describe(manifest);
            const Linker linker(kb.index, kb.closure, kb.config, std::make_shared<LexicalCosineScorer>(),
                                kb.closure_hash);
            std::vector<LinkRequest> requests;
            for (auto& m : detail::read_lines(mentions_path)) requests.push_back({std::move(m)});
            const auto report = bench(linker, requests, bench_options);
            detail::emit(out_path, latency_report_to_json(report).dump(2) + "\n", out);
        } else if (sub == gen) {
            const auto kb = generate_synthetic_kb(spec);
            write_synthetic_kb(kb, out_path);
            manifest.config_hash = validate_config(kb.config).content_hash();
            out << ordered_json{{"seed", spec.seed},
                                {"docs", kb.docs},
                                {"records", kb.records.size()},
                                {"edges", kb.edges.size()},
                                {"tables", kb.tables.size()},
                                {"gold", kb.gold.size()},
                                {"mentions", kb.mentions.size()}}
                       .dump(2)
                << '\n';
        }
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }

    manifest.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    const std::string m = manifest_to_json(manifest).dump() + "\n";
    if (manifest_path.empty()) {
        err << m;
    } else {
        std::ofstream f(manifest_path, std::ios::binary);
        if (!f) {
            err << "error: cannot write manifest " << manifest_path << '\n';
            return 2;
        }
        f << m;
    }
    return 0;
}

}  // namespace tablink::cli

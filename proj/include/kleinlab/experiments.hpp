#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "kleinlab/ctmap.hpp"
#include "kleinlab/familyspec.hpp"
#include "kleinlab/image.hpp"
#include "kleinlab/verify.hpp"

namespace kleinlab {

inline constexpr const char* kToolVersion = "0.1.0";

struct ExperimentResult {
    std::vector<std::string> artifacts;  // paths written
    std::string verdict;                 // human-readable one-liner
    DiagnosticsTable table;              // last table produced, when any
};

namespace detail {

inline void stamp(DiagnosticsTable& table, const ExperimentSpec& spec) {
    table.add_meta("tool-version", kToolVersion);
    table.add_meta("spec-hash", hex64(spec.hash));
    table.add_meta("seed", std::to_string(spec.seed));
    table.add_meta("family", spec.family.name);
}

inline std::string annotation(const ExperimentSpec& spec) {
    return std::string("kleinlab ") + kToolVersion + " spec-hash " + hex64(spec.hash) + " seed " +
           std::to_string(spec.seed);
}

inline void write_file(const std::string& path, const std::string& bytes,
                       ExperimentResult& result) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    result.artifacts.push_back(path);
}

inline void write_table(const DiagnosticsTable& table, const std::string& stem,
                        const std::vector<std::string>& formats, ExperimentResult& result) {
    for (const auto& fmt : formats) {
        if (fmt == "csv") write_file(stem + ".csv", table.to_csv(), result);
        if (fmt == "json") write_file(stem + ".json", table.to_json().dump(2) + "\n", result);
    }
}

inline std::string points_csv(const LimitSample& sample, const ExperimentSpec& spec) {
    std::string out;
    out += "# tool-version = " + std::string(kToolVersion) + "\n";
    out += "# spec-hash = " + hex64(spec.hash) + "\n";
    out += "re,im,isInf,depth,word\n";
    for (const auto& p : sample.points) {
        out += fmt_double(p.p.inf ? 0.0 : p.p.z.real()) + ",";
        out += fmt_double(p.p.inf ? 0.0 : p.p.z.imag()) + ",";
        out += std::string(p.p.inf ? "1" : "0") + ",";
        out += std::to_string(p.depth) + ",";
        out += to_string(p.word) + "\n";
    }
    return out;
}

}  // namespace detail

inline ExperimentResult run_experiment(const ExperimentSpec& spec, const std::string& outDir,
                                       const std::vector<std::string>& formats) {
    namespace fs = std::filesystem;
    fs::create_directories(outDir);
    ExperimentResult result;
    BuiltFamily fam = build_family(spec.family);
    std::string stem = outDir + "/" + spec.family.name + "-" + to_string(spec.kind);

    switch (spec.kind) {
        case ExperimentKind::render: {
            LimitSample sample = sample_fixed_points(fam.primary(), spec.caps.sample_depth);
            if (sample.points.empty()) throw std::runtime_error("render: empty sample");
            Image img = render(sample, spec.image);
            bool wantPng = false, wantPpm = false, wantCsv = false;
            for (const auto& f : formats) {
                wantPng |= f == "png";
                wantPpm |= f == "ppm";
                wantCsv |= f == "csv";
            }
            if (!wantPng && !wantPpm) wantPpm = true;
            if (wantPpm)
                detail::write_file(stem + ".ppm", ppm_bytes(img, detail::annotation(spec)), result);
            if (wantPng)
                detail::write_file(stem + ".png", png_bytes(img, detail::annotation(spec)), result);
            if (wantCsv) detail::write_file(stem + "-points.csv", detail::points_csv(sample, spec),
                                            result);
            result.verdict = std::to_string(sample.points.size()) + " boundary points rendered";
            break;
        }
        case ExperimentKind::hausdorff_curve: {
            if (!fam.sequence) throw std::runtime_error("hausdorff-curve needs a sequence family");
            const RepSequence& seq = *fam.sequence;
            LimitSample limitSample = sample_fixed_points(seq.limit, spec.caps.sample_depth);
            DiagnosticsTable table;
            table.add_meta("experiment", "hausdorff-curve");
            detail::stamp(table, spec);
            table.add_meta("sample-depth", std::to_string(spec.caps.sample_depth));
            size_t colN = table.add_column("n");
            size_t colH = table.add_column("h");
            std::vector<double> hs(seq.steps.size());
            parallel_for(spec.jobs, seq.steps.size(), [&](size_t i) {
                hs[i] = hausdorff_chordal(sample_fixed_points(seq.steps[i], spec.caps.sample_depth),
                                          limitSample);
            });
            for (size_t i = 0; i < hs.size(); ++i) {
                table.data[colN].push_back(static_cast<double>(i + 1));
                table.data[colH].push_back(hs[i]);
            }
            bool tailDecreasing = true;
            size_t tail = std::min<size_t>(8, hs.size());
            for (size_t i = hs.size() - tail + 1; i < hs.size(); ++i)
                if (!(hs[i] < hs[i - 1])) tailDecreasing = false;
            table.add_verdict("tail-decreasing", tailDecreasing ? "yes" : "no");
            detail::write_table(table, stem, formats, result);
            result.table = table;
            result.verdict = std::string("hausdorff tail ") +
                             (tailDecreasing ? "decreasing" : "not decreasing");
            break;
        }
        case ExperimentKind::ct_converge: {
            if (!fam.sequence) throw std::runtime_error("ct-converge needs a sequence family");
            ConvergenceCaps caps;
            caps.grid_depth = spec.caps.grid_depth;
            caps.grid_size = spec.caps.grid_size;
            caps.path_reps = spec.caps.path_reps;
            caps.jobs = spec.jobs;
            ConvergenceReport report = convergence_report(*fam.sequence, caps);
            detail::stamp(report.table, spec);
            detail::write_table(report.table, stem, formats, result);
            result.table = report.table;
            result.verdict = to_string(report.verdict);
            break;
        }
        case ExperimentKind::uep: {
            if (!fam.sequence) throw std::runtime_error("uep needs a sequence family");
            UepCaps caps;
            caps.table_max = spec.caps.table_max;
            caps.depth_cap = spec.caps.depth_cap;
            caps.exhaustive_cap = spec.caps.exhaustive_cap;
            caps.samples_per_length = spec.caps.samples_per_length;
            caps.seed = spec.seed;
            DiagnosticsTable table = uep_table(*fam.sequence, caps);
            detail::stamp(table, spec);
            detail::write_table(table, stem, formats, result);
            result.table = table;
            result.verdict = "uep " + table.verdicts.front().second;
            break;
        }
        case ExperimentKind::uepp: {
            if (!fam.sequence) throw std::runtime_error("uepp needs a sequence family");
            SegmentPool pool =
                make_segment_pool(fam.sequence->source().rank(), spec.caps.table_max,
                                  spec.caps.pool_spread, spec.caps.pool_per_depth, spec.seed);
            DiagnosticsTable table = uepp_table(*fam.sequence, pool, spec.caps.table_max);
            detail::stamp(table, spec);
            detail::write_table(table, stem, formats, result);
            result.table = table;
            result.verdict = "uepp " + table.verdicts.front().second;
            break;
        }
        case ExperimentKind::ep: {
            if (!fam.sequence) throw std::runtime_error("ep needs a sequence family");
            Word w = word_from_string(spec.caps.ep_word);
            MoebiusMap m = fam.sequence->source().eval(w);
            BoundaryPoint xi = classify(m).cls == MapClass::parabolic
                                   ? fixed_points(m).attracting
                                   : fixed_points(m).attracting;
            BoundaryWordPath path = make_power_path(w, spec.caps.ep_path_reps, xi);
            EpDiagnostic ep = ep_diagnostic(*fam.sequence, path,
                                            std::min(spec.caps.table_max,
                                                     spec.caps.ep_path_reps *
                                                         static_cast<int>(w.size()) / 2));
            detail::stamp(ep.table, spec);
            detail::write_table(ep.table, stem, formats, result);
            result.table = ep.table;
            result.verdict = std::string("path case ") + to_string(ep.path_case) +
                             (ep.skipped ? " (skipped)" : "");
            break;
        }
        case ExperimentKind::floyd: {
            const Representation& rep = fam.primary();
            FloydFit fit = floyd_fit(rep, spec.caps.floyd_depth);
            DiagnosticsTable table;
            table.add_meta("experiment", "floyd");
            detail::stamp(table, spec);
            table.add_meta("depth", std::to_string(fit.depth));
            table.add_meta("a", fmt_double(fit.a));
            if (fit.b) table.add_meta("b", fmt_double(*fit.b));
            if (fit.k) table.add_meta("k", fmt_double(*fit.k));
            size_t colL = table.add_column("length");
            size_t colMin = table.add_column("min-dist");
            for (size_t L = 1; L < fit.min_dist_per_len.size(); ++L) {
                table.data[colL].push_back(static_cast<double>(L));
                table.data[colMin].push_back(fit.min_dist_per_len[L]);
            }
            detail::write_table(table, stem, formats, result);
            result.table = table;
            result.verdict = fit.b ? "escape window [" + fmt_double(*fit.b) + ", " +
                                         fmt_double(fit.a) + "]"
                                   : "log-escape constant " + fmt_double(*fit.k);
            break;
        }
        case ExperimentKind::geom_verify: {
            if (!fam.sequence) throw std::runtime_error("geom-verify needs a sequence family");
            const RepSequence& seq = *fam.sequence;
            std::vector<MoebiusMap> candidates = seq.limit.gens;
            std::vector<Word> extra;
            if (fam.cyclic) {
                candidates.push_back(fam.cyclic->limit_q);
                extra.push_back(word_pow(word_from_string("a"),
                                         static_cast<int>(fam.cyclic->powers.back())));
            }
            size_t index = seq.steps.size() - 1;
            auto matches = geometric_limit_match(seq, index, candidates, spec.caps.match_delta,
                                                 std::min(6, spec.caps.grid_depth + 2), extra);
            DiagnosticsTable table;
            table.add_meta("experiment", "geom-verify");
            detail::stamp(table, spec);
            table.add_meta("index", std::to_string(index + 1));
            table.add_meta("delta0", fmt_double(spec.caps.match_delta));
            size_t colC = table.add_column("candidate");
            size_t colM = table.add_column("matched");
            size_t colV = table.add_column("violations");
            int matched = 0;
            for (size_t c = 0; c < matches.size(); ++c) {
                table.data[colC].push_back(static_cast<double>(c));
                table.data[colM].push_back(matches[c].match ? 1.0 : 0.0);
                table.data[colV].push_back(static_cast<double>(matches[c].violations.size()));
                if (matches[c].match && matches[c].violations.empty()) ++matched;
            }
            table.add_verdict("matched", std::to_string(matched) + "/" +
                                             std::to_string(matches.size()));
            detail::write_table(table, stem, formats, result);
            result.table = table;
            result.verdict = "matched " + std::to_string(matched) + " of " +
                             std::to_string(matches.size()) + " candidates uniquely";
            break;
        }
    }
    return result;
}

}  // namespace kleinlab

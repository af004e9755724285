#pragma once

#include <string>
#include <vector>

#include "vulnassess/model.hpp"
#include "vulnassess/pdg.hpp"
#include "vulnassess/provider.hpp"
#include "vulnassess/slicer.hpp"

namespace vulnassess {

namespace detail {

template <typename Fn>
auto run_stage(const char *stage, Fn &&fn) {
    try {
        return fn();
    } catch (const PipelineError &) {
        throw; // already tagged
    } catch (const Error &e) {
        throw PipelineError(stage, e.what());
    }
}

} // namespace detail

struct SlicedFunction {
    FunctionModel function;
    Pdg pdg;
    Idg idg;
    std::string code;         // rendered segment fed downstream
    bool used_fallback = false; // empty slice: whole function body substituted
};

/// parse → dependence graph → POIs → IDG → rendered segment, with the
/// whole-function fallback when no POI is found.
inline SlicedFunction slice_source(const std::string &source, const PoiConfig &poi_cfg,
                                   std::vector<std::string> *warnings = nullptr) {
    SlicedFunction out;
    out.function = detail::run_stage("parse", [&] { return parse_function(source, warnings); });
    out.pdg = detail::run_stage("pdg", [&] { return build_pdg(out.function); });
    auto pois = detail::run_stage("poi", [&] { return find_pois(out.pdg, poi_cfg); });
    out.idg = detail::run_stage("idg", [&] { return build_idg(out.pdg, pois); });
    out.code = detail::run_stage("render", [&] {
        if (out.idg.retained_nodes.empty()) {
            out.used_fallback = true;
            return render_whole_function(out.function);
        }
        return render_idg(out.idg, out.function);
    });
    return out;
}

struct AssessDeps {
    PoiConfig poi_cfg;
    PromptTemplate prompt_template = default_prompt_template();
    const ModelParams *params = nullptr;
    const std::vector<BankEntry> *bank = nullptr;
    VirEngine *vir_engine = nullptr;
};

/// Full assessment of one function: slice, obtain the intention report,
/// assemble the hybrid prompt, classify severity and retrieve a suggestion.
inline Assessment assess(const std::string &code, const AssessDeps &deps) {
    if (!deps.params || !deps.bank || !deps.vir_engine)
        throw Error("assess requires trained params, a suggestion bank and a provider engine");

    auto sliced = slice_source(code, deps.poi_cfg);
    Vir vir = detail::run_stage("vir", [&] { return deps.vir_engine->generate(sliced.code); });
    HybridPrompt hp = assemble_prompt(sliced.code, vir);

    Assessment a;
    Eigen::VectorXd h =
        detail::run_stage("encode", [&] { return encode(hp, *deps.params); });
    Eigen::Vector4d dist = detail::run_stage("predict", [&] { return predict(h, *deps.params); });
    for (int c = 0; c < 4; ++c) a.distribution[static_cast<size_t>(c)] = dist(c);
    a.severity = 0;
    for (int c = 1; c < 4; ++c)
        if (dist(c) > dist(a.severity)) a.severity = c;
    a.confidence = dist(a.severity);
    a.suggestion =
        detail::run_stage("suggest", [&] { return suggest(h, *deps.params, *deps.bank); });
    a.used_fallback = sliced.used_fallback;
    for (const auto &w : sliced.idg.warnings) a.notes.push_back(w);
    return a;
}

inline nlohmann::json assessment_to_json(const Assessment &a) {
    static const char *names[] = {"low", "medium", "high", "critical"};
    nlohmann::json j = {{"severity", a.severity},
                        {"severity_name", names[a.severity & 3]},
                        {"distribution", a.distribution},
                        {"confidence", a.confidence},
                        {"suggestion", a.suggestion},
                        {"slice_fallback", a.used_fallback}};
    if (!a.notes.empty()) j["notes"] = a.notes;
    return j;
}

} // namespace vulnassess

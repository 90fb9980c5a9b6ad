#pragma once

// JSON layout (documented in README.md):
//   complex numbers        -> [re, im]
//   FeedbackConfig         -> {"gamma","g","theta","phi","tau","eta"}
//   CoherentSuperposition  -> {"terms":[{"alpha":[re,im],"coeff":[re,im]},...],
//                              "norm_mode":"as-given"|"renormalize"}

#include <json.hpp>

#include "delayfb/model.hpp"

namespace delayfb {

inline nlohmann::json to_json(Complex z) {
    return nlohmann::json::array({z.real(), z.imag()});
}

inline Complex complex_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 2)
        throw Error(Error::Code::io, "complex value must be a [re, im] pair");
    return Complex(j[0].get<double>(), j[1].get<double>());
}

inline nlohmann::json to_json(const FeedbackConfig& c) {
    return {{"gamma", c.gamma()}, {"g", c.g()},     {"theta", c.theta()},
            {"phi", c.phi()},     {"tau", c.tau()}, {"eta", c.eta()}};
}

inline FeedbackConfig config_from_json(const nlohmann::json& j) {
    return FeedbackConfig(j.at("gamma").get<double>(), j.at("g").get<double>(),
                          j.at("theta").get<double>(), j.at("phi").get<double>(),
                          j.at("tau").get<double>(), j.value("eta", 1.0));
}

inline nlohmann::json to_json(const CoherentSuperposition& s) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& t : s.terms())
        terms.push_back({{"alpha", to_json(t.alpha)}, {"coeff", to_json(t.coeff)}});
    return {{"terms", terms},
            {"norm_mode", s.norm_mode() == NormMode::Renormalize ? "renormalize" : "as-given"}};
}

inline CoherentSuperposition superposition_from_json(const nlohmann::json& j) {
    std::vector<CoherentSuperposition::Term> terms;
    for (const auto& t : j.at("terms"))
        terms.push_back({complex_from_json(t.at("alpha")), complex_from_json(t.at("coeff"))});
    const std::string mode = j.value("norm_mode", "as-given");
    if (mode != "as-given" && mode != "renormalize")
        throw Error(Error::Code::io, "norm_mode must be 'as-given' or 'renormalize'");
    return CoherentSuperposition(std::move(terms), mode == "renormalize"
                                                       ? NormMode::Renormalize
                                                       : NormMode::AsGiven);
}

} // namespace delayfb

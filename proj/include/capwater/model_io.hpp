#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "capwater/spectral.hpp"

/// JSON (de)serialization of NoiseModel, shared by the CLI and any caller
/// that wants the documented on-disk schema:
///   {"type":"gauss_markov","N":1.0,"phi":0.85}
///   {"type":"ar","q_coeffs":[...],"p_coeffs":[...],"q_variance":..,"p_variance":..}
///   {"type":"tabulated","x":[...],"gq":[...],"gp":[...]}
///   {"type":"modes","modes":[{"gq":..,"gp":..},...]}
namespace capwater {

namespace detail {

inline double require_number(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number())
        throw model_error(std::string("noise model: missing numeric field \"") +
                          key + "\"");
    return j[key].get<double>();
}

inline std::vector<double> require_array(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_array())
        throw model_error(std::string("noise model: missing array field \"") +
                          key + "\"");
    std::vector<double> out;
    for (const auto& v : j[key]) {
        if (!v.is_number())
            throw model_error(std::string("noise model: non-numeric entry in \"") +
                              key + "\"");
        out.push_back(v.get<double>());
    }
    return out;
}

}  // namespace detail

inline NoiseModel noise_model_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
        throw model_error("noise model: expected an object with a \"type\" string");
    const std::string type = j["type"].get<std::string>();
    if (type == "gauss_markov")
        return NoiseModel::gauss_markov(detail::require_number(j, "N"),
                                        detail::require_number(j, "phi"));
    if (type == "ar")
        return NoiseModel::ar(detail::require_array(j, "q_coeffs"),
                              detail::require_array(j, "p_coeffs"),
                              detail::require_number(j, "q_variance"),
                              detail::require_number(j, "p_variance"));
    if (type == "tabulated")
        return NoiseModel::tabulated(detail::require_array(j, "x"),
                                     detail::require_array(j, "gq"),
                                     detail::require_array(j, "gp"));
    if (type == "modes") {
        if (!j.contains("modes") || !j["modes"].is_array())
            throw model_error("noise model: missing \"modes\" array");
        std::vector<OneModeNoise> modes;
        for (const auto& m : j["modes"])
            modes.emplace_back(detail::require_number(m, "gq"),
                               detail::require_number(m, "gp"));
        return NoiseModel::modes(std::move(modes));
    }
    throw model_error("noise model: unknown type \"" + type + "\"");
}

inline nlohmann::json noise_model_to_json(const NoiseModel& model) {
    nlohmann::json j;
    if (const auto* gm = std::get_if<GaussMarkovModel>(&model.variant())) {
        j["type"] = "gauss_markov";
        j["N"] = gm->N;
        j["phi"] = gm->phi;
    } else if (const auto* ar = std::get_if<ArModel>(&model.variant())) {
        j["type"] = "ar";
        j["q_coeffs"] = ar->q_coeffs;
        j["p_coeffs"] = ar->p_coeffs;
        j["q_variance"] = ar->q_variance;
        j["p_variance"] = ar->p_variance;
    } else if (const auto* tab = std::get_if<TabulatedModel>(&model.variant())) {
        j["type"] = "tabulated";
        j["x"] = tab->x;
        j["gq"] = tab->gq;
        j["gp"] = tab->gp;
    } else if (const auto* mm = std::get_if<ModesModel>(&model.variant())) {
        j["type"] = "modes";
        j["modes"] = nlohmann::json::array();
        for (const auto& m : mm->modes) {
            // Emit the caller's original orientation.
            j["modes"].push_back({{"gq", m.swapped ? m.gp : m.gq},
                                  {"gp", m.swapped ? m.gq : m.gp}});
        }
    }
    return j;
}

/// Load a model from a JSON file.  Parse errors carry position info; a
/// missing file is a model error.
inline NoiseModel load_noise_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw model_error("cannot open noise model file: " + path);
    nlohmann::json j;
    in >> j;  // nlohmann::json::parse_error reports the byte position
    return noise_model_from_json(j);
}

}  // namespace capwater

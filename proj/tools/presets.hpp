#pragma once

// Built-in configurations, one per acceptance criterion plus a few smoke
// runs. configs/<name>.json holds the same documents.

#include "levymv/config.hpp"

#include <map>
#include <string>

namespace levymv::cli {

struct Preset {
    std::string command;
    json config;
};

inline json chaos_preset(std::uint64_t seed, json sigma, double slope_max, bool monotone) {
    return json{{"description", "mean-square sup gap between particles and frozen-flow copies versus n"},
                {"seed", seed},
                {"driver", {{"type", "stable"}, {"alpha", 1.5}, {"scale", 1.0}}},
                {"truncation", 5.0},
                {"sigma", std::move(sigma)},
                {"initial", {{"type", "gaussian"}, {"mean", 0.0}, {"sd", 1.0}}},
                {"simulation", {{"dt", 0.05}, {"T", 1.0}, {"small_jump_delta", 0.05}}},
                {"chaos",
                 {{"n_list", {50, 100, 200, 400, 800}},
                  {"reps", 20},
                  {"n_ref", 8000},
                  {"expect_slope_max", slope_max},
                  {"require_monotone", monotone}}}};
}

inline const std::map<std::string, Preset>& presets() {
    static const std::map<std::string, Preset> all = [] {
        std::map<std::string, Preset> m;
        m["AC1"] = {"validate-sampler",
                    {{"description", "stable sampler characteristic function"},
                     {"seed", 101},
                     {"sampler",
                      {{"battery", "cf"},
                       {"alphas", {0.8, 1.2, 1.5, 1.9, 2.0}},
                       {"draws", 1000000},
                       {"xis", {0.25, 0.5, 1.0, 2.0, 4.0}},
                       {"scale", 1.0},
                       {"tolerance", 5e-3}}}}};
        m["AC2"] = {"validate-sampler",
                    {{"description", "mean squared distance between a Gaussian sample and the Gaussian law"},
                     {"seed", 102},
                     {"sampler", {{"battery", "gap"}, {"n_list", {10, 100, 1000}}, {"reps", 200}, {"n_ref", 1000000}, {"bound", 4.0}}}}};
        m["AC3"] = {"validate-sampler",
                    {{"description", "distance between empirical measures is bounded by the scaled euclidean gap"},
                     {"seed", 103},
                     {"sampler", {{"battery", "vasdis"}, {"pairs", 10000}, {"n_min", 2}, {"n_max", 64}, {"tolerance", 1e-12}}}}};
        m["AC4"] = {"chaos-rate",
                    chaos_preset(104, {{"type", "linear"}, {"kernel", {{"type", "sine"}, {"c0", 1.0}, {"c1", 0.5}}}}, -0.8, false)};
        m["AC5"] = {"chaos-rate", chaos_preset(105, {{"type", "smoothed_density_power"}, {"eps", 0.5}, {"s", 0.5}}, -0.3, true)};
        m["AC6"] = {"pde",
                    {{"description", "nonlinear fractional Fokker-Planck run with the mass log"},
                     {"seed", 106},
                     {"driver", {{"type", "stable"}, {"alpha", 1.5}, {"scale", 1.0}}},
                     {"sigma", {{"type", "smoothed_density_power"}, {"eps", 0.5}, {"s", 0.5}}},
                     {"pde",
                      {{"task", "solve"},
                       {"L", 1024.0},
                       {"m", 16384},
                       {"T", 1.0},
                       {"initial", {{"type", "gaussian"}, {"mean", 0.0}, {"var", 1.0}}},
                       {"snapshots", {0.0, 0.25, 0.5, 0.75, 1.0}}}}}};
        m["AC7"] = {"pde",
                    {{"description", "RK4 composition against the exact linear solution"},
                     {"seed", 107},
                     {"sigma", {{"type", "constant"}, {"value", 1.0}}},
                     {"pde",
                      {{"task", "linear-oracle"},
                       {"k_prime", 1.0},
                       {"T", 1.0},
                       {"initial", {{"type", "gaussian"}, {"mean", 0.0}, {"var", 1.0}}},
                       {"cases",
                        {{{"alpha", 1.2}, {"L", 4096.0}, {"m", 65536}, {"dt", 0.05}},
                         {{"alpha", 1.8}, {"L", 512.0}, {"m", 8192}, {"dt", 0.008}}}},
                       {"tolerance", 1e-6},
                       {"ratio_range", {12.0, 20.0}}}}}};
        m["AC8"] = {"compare",
                    {{"description", "particle KDE against the PDE density"},
                     {"seed", 108},
                     {"driver", {{"type", "stable"}, {"alpha", 1.5}, {"scale", 1.0}}},
                     {"sigma", {{"type", "smoothed_density_power"}, {"eps", 0.5}, {"s", 0.5}}},
                     {"initial", {{"type", "gaussian"}, {"mean", 0.0}, {"sd", 1.0}}},
                     {"simulation", {{"dt", 0.005}, {"T", 0.5}}},
                     {"pde", {{"L", 1024.0}, {"m", 16384}}},
                     {"compare", {{"n_list", {1000, 10000, 100000}}, {"tolerance", 0.05}, {"require_decreasing", true}}}}};
        const json phi1 = json::array({{{"amplitude", 1.0}, {"center", 0.3}, {"width", 0.8}}});
        const json psi1 = json::array({{{"amplitude", 1.0}, {"center", -0.5}, {"width", 0.6}}, {{"amplitude", 0.5}, {"center", 1.0}, {"width", 0.9}}});
        const json phi2 = json::array({{{"amplitude", 1.0}, {"center", -1.0}, {"width", 0.5}}, {{"amplitude", -0.7}, {"center", 1.5}, {"width", 0.7}}});
        const json psi2 = json::array({{{"amplitude", 1.0}, {"center", 0.0}, {"width", 1.2}}});
        m["AC9"] = {"pde",
                    {{"description", "jump-integral generator against the spectral adjoint"},
                     {"seed", 109},
                     {"driver", {{"type", "stable"}, {"alpha", 1.5}, {"scale", 1.0}}},
                     {"pde",
                      {{"task", "adjoint"},
                       {"L", 256.0},
                       {"m", 8192},
                       {"tolerance", 1e-4},
                       {"cases",
                        {{{"sigma", {{"type", "constant"}, {"value", 1.0}}}, {"nu", {{"mean", 0.0}, {"var", 1.0}}}, {"phi", phi1}, {"psi", psi1}},
                         {{"sigma", {{"type", "linear"}, {"kernel", {{"type", "sine"}, {"c0", 1.0}, {"c1", 0.5}}}}},
                          {"nu", {{"mean", 0.5}, {"var", 2.0}}},
                          {"phi", phi2},
                          {"psi", psi1}},
                         {{"sigma", {{"type", "smoothed_density_power"}, {"eps", 0.5}, {"s", 0.5}}},
                          {"nu", {{"mean", -0.3}, {"var", 0.7}}},
                          {"phi", phi1},
                          {"psi", psi2}}}}}}}};
        m["AC10"] = {"check-h1",
                     {{"description", "regularity checks of the perturbation function"},
                      {"seed", 110},
                      {"h1", {{"alpha", 1.5}, {"gamma", 1.0}, {"eps", 0.01}, {"K1", 1.0}}}}};
        m["AC11"] = {"chaos-rate", m["AC4"].config};
        m["AC11"].config["description"] = "AC4 rerun; compare outputs across thread counts";

        m["simulate-constant"] = {"simulate",
                                  {{"description", "constant coefficient from a point: the marginal at T is an exact stable sample"},
                                   {"seed", 201},
                                   {"driver", {{"type", "stable"}, {"alpha", 1.5}, {"scale", 1.0}}},
                                   {"sigma", {{"type", "constant"}, {"value", 1.0}}},
                                   {"initial", {{"type", "point"}, {"x", 0.0}}},
                                   {"simulation", {{"n", 100000}, {"dt", 0.1}, {"T", 1.0}, {"export", "none"}}}}};
        m["pde-linear"] = {"pde",
                           {{"description", "constant coefficient PDE run checked against the exact solution"},
                            {"seed", 202},
                            {"driver", {{"type", "stable"}, {"alpha", 1.5}, {"scale", 1.0}}},
                            {"sigma", {{"type", "constant"}, {"value", 1.0}}},
                            {"pde", {{"task", "solve"}, {"L", 1024.0}, {"m", 16384}, {"T", 0.5}, {"dt", 0.01}, {"snapshots", {0.0, 0.5}}}}}};
        m["chaos-constant"] = {"chaos-rate", chaos_preset(203, {{"type", "constant"}, {"value", 1.0}}, -0.8, false)};
        m["chaos-constant"].config["chaos"]["n_list"] = {20, 40, 80, 160};
        m["chaos-constant"].config["chaos"]["n_ref"] = 1600;
        m["chaos-constant"].config["chaos"]["reps"] = 4;
        m["chaos-constant"].config["chaos"].erase("expect_slope_max");
        // Small interacting run for quick thread-count comparisons.
        m["chaos-small"] = m["chaos-constant"];
        m["chaos-small"].config["seed"] = 205;
        m["chaos-small"].config["description"] = "small interacting chaos run";
        m["chaos-small"].config["sigma"] = {{"type", "linear"}, {"kernel", {{"type", "sine"}, {"c0", 1.0}, {"c1", 0.5}}}};
        m["sampler-gaussian"] = {"validate-sampler",
                                 {{"description", "alpha = 2 draws against the Gaussian moments"},
                                  {"seed", 204},
                                  {"sampler", {{"battery", "cf"}, {"alphas", {2.0}}, {"draws", 200000}, {"tolerance", 0.02}}}}};
        return m;
    }();
    return all;
}

} // namespace levymv::cli

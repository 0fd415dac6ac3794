#pragma once

#include <string>
#include <vector>

#include "config.hpp"

namespace coho_euler {

struct ExampleCatalogEntry {
    std::string name;
    std::string description;
    Json config;
};

namespace detail {

inline Json fourier_json(double a0, std::vector<double> a, std::vector<double> b) {
    return Json{{"a0", a0}, {"a", a}, {"b", b}};
}

inline Json random_json(double mean, int modes, double amplitude) {
    return Json{{"random_fourier", {{"mean", mean}, {"modes", modes}, {"amplitude", amplitude}}}};
}

} // namespace detail

/// Bundled examples in documented order.
inline std::vector<ExampleCatalogEntry> example_catalog() {
    std::vector<ExampleCatalogEntry> out;
    const double x0 = 1.0 / std::sqrt(6.0);

    out.push_back({"su2_rigid_body", "Free rigid body: SU(2) with inertia diag(1,2,3), homogeneous Euler-Arnold flow",
                   Json{{"name", "su2_rigid_body"},
                        {"description", "Free rigid body on SU(2), inertia diag(1,2,3)"},
                        {"problem", {{"kind", "homogeneous"}}},
                        {"algebra", {{"preset", "su2"}}},
                        {"metric", {{"gram", {{1.0, 0.0, 0.0}, {0.0, 2.0, 0.0}, {0.0, 0.0, 3.0}}}}},
                        {"initial", {{"v", {x0, x0, x0}}}},
                        {"solver", {{"dt", 1e-3}, {"t_end", 100.0}}},
                        {"output", {{"directory", "out/su2_rigid_body"}, {"snapshot_every", 10000}, {"diagnostics_every", 100}}}}});

    out.push_back({"s3_t2_interval", "Round S^3 under the T^2 action: interval with two singular orbits",
                   Json{{"name", "s3_t2_interval"},
                        {"description", "Round S^3 with the T^2 action, constant vertical data"},
                        {"problem", {{"kind", "interval"}}},
                        {"algebra", {{"preset", "abelian"}, {"dim", 2}}},
                        {"profile", {{"family", "round_s3_t2"}}},
                        {"initial", {{"v", {1.0, 2.0}}}},
                        {"solver", {{"N", 128}, {"dt", 1e-3}, {"t_end", 10.0}}},
                        {"output", {{"directory", "out/s3_t2_interval"}, {"snapshot_every", 1000}, {"diagnostics_every", 100}}}}});

    out.push_back({"t3_circle", "Flat 3-torus: transport of a sine profile by unit horizontal flow",
                   Json{{"name", "t3_circle"},
                        {"description", "Flat 3-torus, c = 1, v1 = sin(2 pi r)"},
                        {"problem", {{"kind", "circle"}}},
                        {"algebra", {{"preset", "abelian"}, {"dim", 2}}},
                        {"profile",
                         {{"family", "warped_torus"},
                          {"length", 1.0},
                          {"log_diagonal", {detail::fourier_json(0.0, {}, {}), detail::fourier_json(0.0, {}, {})}}}},
                        {"initial", {{"c", 1.0}, {"v", {Json{{"fourier", detail::fourier_json(0.0, {}, {1.0})}}, 0.0}}}},
                        {"solver", {{"N", 256}, {"dt", 1e-3}, {"t_end", 1.0}}},
                        {"output", {{"directory", "out/t3_circle"}, {"snapshot_every", 250}, {"diagnostics_every", 10}}}}});

    out.push_back({"berger_circle", "SU(2) fibers over a circle with a Fourier-perturbed diagonal metric, random data",
                   Json{{"name", "berger_circle"},
                        {"description", "SU(2) fibers over S^1, Fourier-perturbed diag(1, 1.5, 2), seeded random data"},
                        {"problem", {{"kind", "circle"}}},
                        {"algebra", {{"preset", "su2"}}},
                        {"profile",
                         {{"family", "berger_circle"},
                          {"length", 6.283185307179586},
                          {"log_diagonal",
                           {detail::fourier_json(0.0, {0.05}, {0.02}),
                            detail::fourier_json(0.4054651081081644, {-0.03}, {0.04}),
                            detail::fourier_json(0.6931471805599453, {0.04}, {-0.05})}}}},
                        {"initial",
                         {{"c", 0.5},
                          {"v", {detail::random_json(0.0, 3, 0.05), detail::random_json(0.0, 3, 0.05),
                                 detail::random_json(0.8, 3, 0.05)}}}},
                        {"solver", {{"N", 128}, {"dt", 1e-3}, {"t_end", 10.0}}},
                        {"output", {{"directory", "out/berger_circle"}, {"snapshot_every", 1000}, {"diagnostics_every", 10}}},
                        {"seed", 20261017}}});

    out.push_back({"boundary_interval", "SU(2) fibers over an interval whose ends are principal-orbit boundaries",
                   Json{{"name", "boundary_interval"},
                        {"description", "SU(2) fibers over [0, 1] with boundary endpoints, seeded random data"},
                        {"problem", {{"kind", "interval"}}},
                        {"algebra", {{"preset", "su2"}}},
                        {"profile",
                         {{"family", "berger_circle"},
                          {"length", 1.0},
                          {"endpoints", Json::array({"boundary", "boundary"})},
                          {"log_diagonal",
                           {detail::fourier_json(0.0, {0.05}, {0.03}),
                            detail::fourier_json(0.4054651081081644, {0.02}, {-0.04}),
                            detail::fourier_json(0.6931471805599453, {-0.03}, {0.05})}}}},
                        {"initial",
                         {{"v", {detail::random_json(0.0, 3, 0.05), detail::random_json(0.0, 3, 0.05),
                                 detail::random_json(0.8, 3, 0.05)}}}},
                        {"solver", {{"N", 64}, {"dt", 1e-3}, {"t_end", 10.0}}},
                        {"output", {{"directory", "out/boundary_interval"}, {"snapshot_every", 1000}, {"diagnostics_every", 10}}},
                        {"seed", 7}}});
    return out;
}

inline const ExampleCatalogEntry* find_example(const std::string& name) {
    static const auto catalog = example_catalog();
    for (const auto& e : catalog)
        if (e.name == name) return &e;
    return nullptr;
}

} // namespace coho_euler

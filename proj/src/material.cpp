#include "tsvstress/material.hpp"

#include <cmath>

namespace tsvstress {

std::pair<double, double> lame_parameters(double youngs_modulus, double poisson_ratio) {
    if (!(youngs_modulus > 0.0)) throw Error("material: Young modulus must be > 0");
    if (!(poisson_ratio > -1.0) || !(poisson_ratio < 0.5))
        throw Error("material: Poisson ratio must lie in (-1, 0.5); got " +
                    std::to_string(poisson_ratio));
    double lambda = youngs_modulus * poisson_ratio / ((1.0 + poisson_ratio) * (1.0 - 2.0 * poisson_ratio));
    double mu = youngs_modulus / (2.0 * (1.0 + poisson_ratio));
    return {lambda, mu};
}

Material Material::make(double youngs_modulus, double poisson_ratio, double thermal_expansion) {
    auto [lambda, mu] = lame_parameters(youngs_modulus, poisson_ratio);
    Material m;
    m.youngs_modulus = youngs_modulus;
    m.poisson_ratio = poisson_ratio;
    m.thermal_expansion = thermal_expansion;
    m.lame_lambda = lambda;
    m.lame_mu = mu;
    return m;
}

std::string_view material_name(MaterialId id) {
    switch (id) {
        case MaterialId::Copper: return "copper";
        case MaterialId::Liner: return "liner";
        case MaterialId::Silicon: return "silicon";
    }
    return "unknown";
}

MaterialTable MaterialTable::defaults() {
    MaterialTable t;
    t[MaterialId::Copper] = Material::make(110e9, 0.35, 17e-6);
    t[MaterialId::Liner] = Material::make(71e9, 0.16, 0.5e-6);
    t[MaterialId::Silicon] = Material::make(130e9, 0.28, 2.8e-6);
    return t;
}

}  // namespace tsvstress

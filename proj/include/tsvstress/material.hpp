#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <utility>

#include "tsvstress/core.hpp"

namespace tsvstress {

/// λ = Eν/((1+ν)(1−2ν)), μ = E/(2(1+ν)). Rejects ν outside (−1, 0.5).
std::pair<double, double> lame_parameters(double youngs_modulus, double poisson_ratio);

/// Isotropic linear thermoelastic material. Lamé parameters are derived on
/// construction and always consistent with (E, ν).
struct Material {
    double youngs_modulus = 0.0;   // E [Pa]
    double poisson_ratio = 0.0;    // ν
    double thermal_expansion = 0.0;  // α_th [1/K]
    double lame_lambda = 0.0;      // λ [Pa]
    double lame_mu = 0.0;          // μ [Pa]

    static Material make(double youngs_modulus, double poisson_ratio, double thermal_expansion);
};

/// Uniform thermal load of one block [K].
struct LoadCase {
    double delta_t = 0.0;
};

enum class MaterialId : std::uint8_t { Copper = 0, Liner = 1, Silicon = 2 };

std::string_view material_name(MaterialId id);

/// The three materials of a TSV unit block, indexed by MaterialId.
struct MaterialTable {
    std::array<Material, 3> entries;

    const Material& operator[](MaterialId id) const {
        return entries[static_cast<std::size_t>(id)];
    }
    Material& operator[](MaterialId id) { return entries[static_cast<std::size_t>(id)]; }

    /// Literature constants for copper / SiO2 liner / silicon.
    static MaterialTable defaults();
};

}  // namespace tsvstress

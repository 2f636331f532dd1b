#pragma once

#include <array>
#include <span>
#include <vector>

#include "tsvstress/linalg.hpp"
#include "tsvstress/material.hpp"
#include "tsvstress/mesh.hpp"

namespace tsvstress::fem {

/// Nodal displacements, node-major with x,y,z components per node [m].
using DisplacementField = std::vector<double>;

/// Voigt stress components [Pa].
struct StressTensor {
    double xx = 0.0, yy = 0.0, zz = 0.0;
    double xy = 0.0, yz = 0.0, zx = 0.0;
};

/// Prescribed displacement values keyed by fine-mesh DoF index.
class DirichletSet {
public:
    /// Registers dof = value; conflicting duplicates are an error.
    void set(std::uint32_t dof, double value);
    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }

    /// Sorted (dof, value) pairs.
    const std::vector<std::pair<std::uint32_t, double>>& entries() const;

private:
    mutable std::vector<std::pair<std::uint32_t, double>> entries_;
    mutable bool sorted_ = true;
};

/// 24x24 stiffness of one trilinear hexahedron, 2x2x2 Gauss quadrature.
linalg::DenseMatrix element_stiffness(const std::array<std::array<double, 3>, 8>& corners,
                                      const Material& mat);

/// Thermal load vector of one element for ΔT = 1.
std::array<double, 24> element_thermal_load(const std::array<std::array<double, 3>, 8>& corners,
                                            const Material& mat);

struct AssembledSystem {
    linalg::CsrMatrix stiffness;
    std::vector<double> load;  // for ΔT = 1 unless element_delta_t was given
};

/// Global stiffness and thermal load. element_delta_t, when present, scales
/// each element's load (per-block thermal loads in array meshes).
AssembledSystem assemble(const HexMesh& mesh, const MaterialTable& mats,
                         std::span<const double> element_delta_t = {}, int threads = 1);

/// Symmetric Dirichlet lifting: constrained rows/columns are cleared with a
/// unit diagonal, free rows of b pick up -A_f,bc * u_bc, constrained rows of
/// b carry the prescribed values. Keeps the system SPD.
void apply_dirichlet_lifting(linalg::CsrMatrix& a, std::vector<double>& b,
                             const DirichletSet& bc);

/// Stress at a point: containing element located with the lowest-index tie
/// rule, strain from trilinear shape gradients, constitutive law with that
/// element's material and the given ΔT.
StressTensor evaluate_stress(const DisplacementField& field, const HexMesh& mesh,
                             const std::array<double, 3>& point, const MaterialTable& mats,
                             double delta_t);

/// Same, but with the containing element chosen by the caller (point must
/// lie inside that element's box).
StressTensor evaluate_stress_in_element(const DisplacementField& field, const HexMesh& mesh,
                                        std::size_t element, const std::array<double, 3>& point,
                                        const MaterialTable& mats, double delta_t);

double von_mises(const StressTensor& s);

}  // namespace tsvstress::fem

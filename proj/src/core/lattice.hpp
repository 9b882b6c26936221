#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "core/fields.hpp"

namespace patchflow {

enum class LatticeLayout { cell_centered, vertex };

/// Initial density: a pointwise function on R^n, or a set of grid samples.
struct InitialDensity {
  std::function<double(const double*)> rho;
  /// When set, each sample is one uniform cell and rho is ignored.
  std::shared_ptr<const ScalarField> samples;
};

InitialDensity ball_patch(std::vector<double> center, double radius, double value);
InitialDensity annulus_patch(std::vector<double> center, double r_inner, double r_outer, double value);
InitialDensity zero_density();

/// Reference lattice and per-particle data. One particle per lattice cell
/// with nonzero initial content.
///
/// The particle sits at the density-weighted centroid of its cell content
/// (its marker). `mass` is the cell average of rho0, so a particle carries
/// mass * det(DX) * h^n. Cells cut by the support boundary keep the sub-cell
/// averages of rho0 on an r^n split for near-field quadrature.
struct ParticleGeometry {
  int n = 0;
  double h = 0.0;
  int refine = 1;                 // r
  std::vector<double> origin;     // center of lattice cell 0
  std::vector<int> dims;          // lattice cells per axis

  std::vector<double> alpha;      // markers, count * n
  std::vector<double> offset;     // marker - cell center, count * n
  std::vector<int> cell;          // lattice multi-index, count * n
  std::vector<double> mass;       // cell average of rho0
  std::vector<double> rho0;       // mean of rho0 over the nonzero part of the cell
  std::vector<double> occupancy;  // fraction of the cell where rho0 != 0
  std::vector<std::int32_t> sub_slot;   // -1 for uniform cells
  std::vector<double> sub_values;       // slots * r^n
  std::vector<double> sub_centroids;    // slots * r^n * n, content centroid in units of h
  std::vector<double> sub_offsets;      // r^n * n sub-cell centers in units of h, relative to the cell center
  std::vector<std::int32_t> lattice_to_particle;  // dense, -1 where empty
  std::function<double(const double*)> rho;       // pointwise rho0 when known

  double rho0_sup = 0.0;

  std::size_t count() const { return mass.size(); }
  std::size_t subcells() const { return sub_offsets.size() / n; }
  std::size_t flat(const int* multi) const;
  /// Particle at lattice index (cell + delta) or -1.
  std::int32_t neighbor(std::size_t p, const int* delta) const;
  void cell_center(std::size_t p, double* x) const;
  /// rho0 cell averages on the lattice (cell centers), with one empty cell of
  /// padding on each side, for multilinear interpolation.
  GridVectorField density_grid() const;
  /// rho0 at the markers as a field on the reference configuration.
  ScalarField rho0_field() const;
};

struct LatticeOptions {
  double h = 0.0;
  LatticeLayout layout = LatticeLayout::cell_centered;
  std::vector<double> lo, hi;  // extent that the lattice must cover
  int refine = 4;
  int fine = 4;                // samples per sub-cell per axis
};

std::shared_ptr<const ParticleGeometry> build_geometry(int n, const InitialDensity& rho, const LatticeOptions& opt);

}  // namespace patchflow

#pragma once
// Particle masses and the two fundamental constants. eta is the strength of
// the configuration-space fluctuations; it defaults to hbar (the locus where
// the information geometry reproduces quantum theory) but is stored
// independently so the sampler can probe eta != hbar.

#include <string>
#include <vector>

#include "edlab/errors.hpp"
#include "edlab/grid.hpp"

namespace edlab {

struct ParticleSystem {
  std::vector<double> masses;  // one per particle, > 0
  double hbar = 1.0;
  double eta = 1.0;

  ParticleSystem() = default;
  explicit ParticleSystem(std::vector<double> m, double hbar_ = 1.0)
      : masses(std::move(m)), hbar(hbar_), eta(hbar_) {
    check();
  }
  ParticleSystem(std::vector<double> m, double hbar_, double eta_)
      : masses(std::move(m)), hbar(hbar_), eta(eta_) {
    check();
  }

  int particle_count() const { return static_cast<int>(masses.size()); }

  double total_mass() const {
    double s = 0.0;
    for (double m : masses) s += m;
    return s;
  }

  double mass(int particle) const { return masses[static_cast<std::size_t>(particle)]; }

  // Mass attached to configuration axis A = (n, a): the diagonal metric
  // m_AB = m_n delta_AB.
  double mass_for_axis(const GridSpec& grid, int axis) const {
    return masses[static_cast<std::size_t>(grid.particle_of_axis(axis))];
  }

  void require_match(const GridSpec& grid) const {
    if (particle_count() != grid.particle_count())
      throw GridMismatch("system has " + std::to_string(particle_count()) +
                         " masses but grid expects " +
                         std::to_string(grid.particle_count()) + " particles");
  }

 private:
  void check() const {
    if (masses.empty()) throw ValidationError("at least one particle mass required");
    for (double m : masses)
      if (!(m > 0.0)) throw ValidationError("particle masses must be positive");
    if (!(hbar > 0.0)) throw ValidationError("hbar must be positive");
    if (!(eta > 0.0)) throw ValidationError("eta must be positive");
  }
};

}  // namespace edlab

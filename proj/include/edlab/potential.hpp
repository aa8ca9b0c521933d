#pragma once
// Potential families. Relational potentials depend only on interparticle
// separations (min-image), which is what makes total momentum and angular
// momentum conserved; the external harmonic trap deliberately breaks that and
// serves as the negative control.

#include <string>
#include <vector>

#include "edlab/errors.hpp"
#include "edlab/grid.hpp"
#include "edlab/system.hpp"

namespace edlab {

enum class PotentialFamily { Free, PairSpring, PairGaussian, ExternalHarmonic };

struct PotentialSpec {
  PotentialFamily family = PotentialFamily::Free;
  double spring_k = 0.0;    // pair-spring: (k/2) |x_n - x_m|^2
  double well_depth = 0.0;  // pair-gaussian: -depth exp(-|x_n - x_m|^2 / 2 w^2)
  double well_width = 1.0;
  double trap_omega = 0.0;  // external-harmonic: (m_n w^2 / 2) |x_n|^2

  bool relational() const { return family != PotentialFamily::ExternalHarmonic; }

  static PotentialSpec free() { return {}; }
  static PotentialSpec pair_spring(double k) {
    PotentialSpec p;
    p.family = PotentialFamily::PairSpring;
    p.spring_k = k;
    return p;
  }
  static PotentialSpec pair_gaussian(double depth, double width) {
    PotentialSpec p;
    p.family = PotentialFamily::PairGaussian;
    p.well_depth = depth;
    p.well_width = width;
    return p;
  }
  static PotentialSpec external_harmonic(double omega) {
    PotentialSpec p;
    p.family = PotentialFamily::ExternalHarmonic;
    p.trap_omega = omega;
    return p;
  }

  void validate() const {
    if (family == PotentialFamily::PairSpring && !(spring_k > 0.0))
      throw ValidationError("pair-spring needs spring_k > 0");
    if (family == PotentialFamily::PairGaussian &&
        (!(well_depth > 0.0) || !(well_width > 0.0)))
      throw ValidationError("pair-gaussian needs depth > 0 and width > 0");
    if (family == PotentialFamily::ExternalHarmonic && !(trap_omega > 0.0))
      throw ValidationError("external-harmonic needs omega > 0");
  }
};

std::string family_name(PotentialFamily f);

// V evaluated at every grid point.
std::vector<double> potential_grid(const GridSpec& grid, const ParticleSystem& sys,
                                   const PotentialSpec& spec);

}  // namespace edlab

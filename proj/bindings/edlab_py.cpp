// Python bindings for the edlab core: state construction, spectral evolution,
// best matching, walker ensembles, and the maximum-entropy kernel. Arrays
// cross the boundary as numpy copies shaped by the grid, so python callers
// never alias the C++ buffers.

#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <complex>
#include <cstddef>
#include <vector>

#include "edlab/best_match.hpp"
#include "edlab/errors.hpp"
#include "edlab/evolution.hpp"
#include "edlab/grid.hpp"
#include "edlab/io.hpp"
#include "edlab/observables.hpp"
#include "edlab/parallel.hpp"
#include "edlab/potential.hpp"
#include "edlab/sampler.hpp"
#include "edlab/shift.hpp"
#include "edlab/state.hpp"
#include "edlab/system.hpp"

namespace py = pybind11;
using namespace edlab;

namespace {

std::vector<py::ssize_t> grid_shape(const GridSpec& g) {
  std::vector<py::ssize_t> shape;
  shape.reserve(static_cast<std::size_t>(g.dim()));
  for (int ax = 0; ax < g.dim(); ++ax)
    shape.push_back(static_cast<py::ssize_t>(g.points(ax)));
  return shape;
}

template <typename T>
py::array_t<T> field_array(const GridSpec& g, const std::vector<T>& data) {
  py::array_t<T> out(grid_shape(g));
  std::copy(data.begin(), data.end(), out.mutable_data());
  return out;
}

template <typename T>
using CArray = py::array_t<T, py::array::c_style | py::array::forcecast>;

template <typename T>
void copy_into(const CArray<T>& src, std::vector<T>& dst, const char* what) {
  if (static_cast<std::size_t>(src.size()) != dst.size())
    throw ValidationError(std::string(what) + " array has " +
                          std::to_string(src.size()) + " entries but the grid holds " +
                          std::to_string(dst.size()));
  std::copy(src.data(), src.data() + src.size(), dst.begin());
}

}  // namespace

PYBIND11_MODULE(_edlab, m) {
  m.doc() =
      "Entropic dynamics laboratory: spectral Schrodinger solvers on periodic "
      "grids, best-matching shift extraction, stochastic walker ensembles, and "
      "the maximum-entropy transition kernel.";
  m.attr("__version__") = "0.1.0";

  py::register_exception<Error>(m, "EdlabError");

  // --- grid and system -------------------------------------------------------
  py::class_<GridSpec>(m, "GridSpec")
      .def(py::init<int, int, std::vector<std::int64_t>, std::vector<double>>(),
           py::arg("spatial_dim"), py::arg("particle_count"), py::arg("points"),
           py::arg("lengths"))
      .def_static("uniform", &GridSpec::uniform, py::arg("spatial_dim"),
                  py::arg("particle_count"), py::arg("points_per_axis"),
                  py::arg("length"))
      .def_property_readonly("spatial_dim", &GridSpec::spatial_dim)
      .def_property_readonly("particle_count", &GridSpec::particle_count)
      .def_property_readonly("dim", &GridSpec::dim)
      .def_property_readonly("total_points", &GridSpec::total_points)
      .def_property_readonly("cell_volume", &GridSpec::cell_volume)
      .def("points", py::overload_cast<int>(&GridSpec::points, py::const_),
           py::arg("axis"))
      .def_property_readonly("shape",
                             py::overload_cast<>(&GridSpec::points, py::const_))
      .def_property_readonly("lengths", &GridSpec::lengths)
      .def("length", &GridSpec::length, py::arg("axis"))
      .def("spacing", &GridSpec::spacing, py::arg("axis"))
      .def("coord", &GridSpec::coord, py::arg("axis"), py::arg("index"),
           "Coordinate of the per-axis index (not the flat point index).")
      .def("axis_index", &GridSpec::axis_index, py::arg("flat"), py::arg("axis"))
      .def("min_image", &GridSpec::min_image, py::arg("axis"), py::arg("dx"))
      .def("axis_of", &GridSpec::axis_of, py::arg("particle"), py::arg("component"))
      .def("particle_of_axis", &GridSpec::particle_of_axis, py::arg("axis"))
      .def("component_of_axis", &GridSpec::component_of_axis, py::arg("axis"))
      .def(
          "axis_coordinates",
          [](const GridSpec& g, int axis) {
            py::array_t<double> out(static_cast<py::ssize_t>(g.points(axis)));
            double* p = out.mutable_data();
            for (std::int64_t j = 0; j < g.points(axis); ++j)
              p[j] = g.coord(axis, j);
            return out;
          },
          py::arg("axis"), "All grid coordinates along one axis.");

  py::class_<ParticleSystem>(m, "ParticleSystem")
      .def(py::init<std::vector<double>, double>(), py::arg("masses"),
           py::arg("hbar") = 1.0)
      .def(py::init<std::vector<double>, double, double>(), py::arg("masses"),
           py::arg("hbar"), py::arg("eta"))
      .def_readonly("masses", &ParticleSystem::masses)
      .def_readonly("hbar", &ParticleSystem::hbar)
      .def_readonly("eta", &ParticleSystem::eta)
      .def("mass", &ParticleSystem::mass, py::arg("particle"))
      .def("total_mass", &ParticleSystem::total_mass)
      .def_property_readonly("particle_count", &ParticleSystem::particle_count);

  // --- states -----------------------------------------------------------------
  py::class_<WaveFunction>(m, "WaveFunction")
      .def(py::init([](const GridSpec& g, const CArray<std::complex<double>>& amp,
                       double t) {
             WaveFunction w{g, std::vector<std::complex<double>>(
                                   static_cast<std::size_t>(g.total_points())),
                            t};
             copy_into(amp, w.amp, "amplitude");
             return w;
           }),
           py::arg("grid"), py::arg("amp"), py::arg("t") = 0.0)
      .def_readonly("grid", &WaveFunction::grid)
      .def_readwrite("t", &WaveFunction::t)
      .def_property(
          "amp", [](const WaveFunction& w) { return field_array(w.grid, w.amp); },
          [](WaveFunction& w, const CArray<std::complex<double>>& a) {
            copy_into(a, w.amp, "amplitude");
          },
          "Amplitudes as a complex array shaped by the grid (copied).");

  py::class_<EpistemicState>(m, "EpistemicState")
      .def_readonly("grid", &EpistemicState::grid)
      .def_readwrite("t", &EpistemicState::t)
      .def_property(
          "rho", [](const EpistemicState& s) { return field_array(s.grid, s.rho); },
          [](EpistemicState& s, const CArray<double>& a) {
            copy_into(a, s.rho, "density");
          })
      .def_property(
          "phi", [](const EpistemicState& s) { return field_array(s.grid, s.phi); },
          [](EpistemicState& s, const CArray<double>& a) {
            copy_into(a, s.phi, "phase");
          });

  py::class_<GaussianSpec>(m, "GaussianSpec")
      .def(py::init([](std::vector<double> centers, std::vector<double> widths,
                       std::vector<double> wavevectors) {
             GaussianSpec s;
             if (wavevectors.empty()) wavevectors.assign(centers.size(), 0.0);
             s.centers = std::move(centers);
             s.widths = std::move(widths);
             s.wavevectors = std::move(wavevectors);
             return s;
           }),
           py::arg("centers"), py::arg("widths"),
           py::arg("wavevectors") = std::vector<double>{})
      .def_readwrite("centers", &GaussianSpec::centers)
      .def_readwrite("widths", &GaussianSpec::widths)
      .def_readwrite("wavevectors", &GaussianSpec::wavevectors);

  m.def("gaussian_packet", &gaussian_packet, py::arg("grid"), py::arg("spec"),
        "Normalized periodic Gaussian packet; throws when the grid cannot "
        "resolve the width or the tails reach the box edge.");
  m.def("plane_wave", &plane_wave, py::arg("grid"), py::arg("modes"),
        "Uniform-density state with an integer number of phase windings per axis.");
  m.def("normalize", &normalize, py::arg("psi"));
  m.def("norm_squared", &norm_squared, py::arg("psi"));
  m.def("overlap", &overlap, py::arg("a"), py::arg("b"));
  m.def("infidelity", &infidelity, py::arg("a"), py::arg("b"));
  m.def("state_distance", &state_distance, py::arg("a"), py::arg("b"));
  m.def("min_relative_density", &min_relative_density, py::arg("psi"));
  m.def("wf_to_epistemic", &wf_to_epistemic, py::arg("psi"), py::arg("system"),
        "Density and action-unit phase chart; throws on nodes.");
  m.def("epistemic_to_wf", &epistemic_to_wf, py::arg("state"), py::arg("system"));
  m.def("position_expectation", &position_expectation, py::arg("psi"), py::arg("axis"));
  m.def("position_second_moment", &position_second_moment, py::arg("psi"),
        py::arg("axis"));
  m.def("center_of_mass", &center_of_mass, py::arg("psi"), py::arg("system"));

  // --- shift and potential ---------------------------------------------------
  py::class_<ShiftVelocity>(m, "ShiftVelocity")
      .def(py::init<>())
      .def_static("zero", &ShiftVelocity::zero, py::arg("spatial_dim"))
      .def_readwrite("lambda_dot", &ShiftVelocity::lambda_dot)
      .def_readwrite("zeta_dot", &ShiftVelocity::zeta_dot)
      .def_property_readonly("spatial_dim", &ShiftVelocity::spatial_dim)
      .def("has_rotation", &ShiftVelocity::has_rotation);

  py::enum_<PotentialFamily>(m, "PotentialFamily")
      .value("Free", PotentialFamily::Free)
      .value("PairSpring", PotentialFamily::PairSpring)
      .value("PairGaussian", PotentialFamily::PairGaussian)
      .value("ExternalHarmonic", PotentialFamily::ExternalHarmonic);

  py::class_<PotentialSpec>(m, "PotentialSpec")
      .def(py::init<>())
      .def_static("free", &PotentialSpec::free)
      .def_static("pair_spring", &PotentialSpec::pair_spring, py::arg("k"))
      .def_static("pair_gaussian", &PotentialSpec::pair_gaussian, py::arg("depth"),
                  py::arg("width"))
      .def_static("external_harmonic", &PotentialSpec::external_harmonic,
                  py::arg("omega"))
      .def_readwrite("family", &PotentialSpec::family)
      .def_readwrite("spring_k", &PotentialSpec::spring_k)
      .def_readwrite("well_depth", &PotentialSpec::well_depth)
      .def_readwrite("well_width", &PotentialSpec::well_width)
      .def_readwrite("trap_omega", &PotentialSpec::trap_omega)
      .def("relational", &PotentialSpec::relational);

  m.def(
      "potential_grid",
      [](const GridSpec& g, const ParticleSystem& sys, const PotentialSpec& spec) {
        return field_array(g, potential_grid(g, sys, spec));
      },
      py::arg("grid"), py::arg("system"), py::arg("spec"),
      "Potential sampled on the configuration grid, shaped like the grid.");

  // --- observables and evolution ----------------------------------------------
  py::class_<ObservableReport>(m, "ObservableReport")
      .def_readonly("t", &ObservableReport::t)
      .def_readonly("norm", &ObservableReport::norm)
      .def_readonly("energy", &ObservableReport::energy)
      .def_readonly("momentum", &ObservableReport::momentum)
      .def_readonly("angular", &ObservableReport::angular)
      .def_readonly("inertia", &ObservableReport::inertia)
      .def_readonly("hermiticity_defect", &ObservableReport::hermiticity_defect);

  m.def(
      "observable_report",
      [](const WaveFunction& psi, const ParticleSystem& sys,
         const CArray<double>& v, const ShiftVelocity& shift) {
        std::vector<double> pot(static_cast<std::size_t>(psi.grid.total_points()));
        copy_into(v, pot, "potential");
        return observable_report(psi, sys, pot, shift);
      },
      py::arg("psi"), py::arg("system"), py::arg("potential"), py::arg("shift"),
      "Norm, shifted-frame energy, momentum, angular momentum, and inertia.");

  py::enum_<Backend>(m, "Backend")
      .value("SplitStep", Backend::SplitStep)
      .value("CrankNicolson", Backend::CrankNicolson);

  py::class_<SolverParams>(m, "SolverParams")
      .def(py::init<>())
      .def_readwrite("backend", &SolverParams::backend)
      .def_readwrite("dt", &SolverParams::dt)
      .def_readwrite("steps", &SolverParams::steps)
      .def_readwrite("record_stride", &SolverParams::record_stride)
      .def_readwrite("cn_tol", &SolverParams::cn_tol)
      .def_readwrite("cn_max_iter", &SolverParams::cn_max_iter)
      .def_readwrite("boundary_check", &SolverParams::boundary_check);

  py::class_<EvolutionRecord>(m, "EvolutionRecord")
      .def_readonly("psi", &EvolutionRecord::psi)
      .def_readonly("obs", &EvolutionRecord::obs);

  py::class_<EvolutionResult>(m, "EvolutionResult")
      .def_readonly("records", &EvolutionResult::records)
      .def_readonly("boundary_warnings", &EvolutionResult::boundary_warnings);

  m.def(
      "evolve",
      [](const WaveFunction& psi0, const ParticleSystem& sys,
         const CArray<double>& v, const ShiftVelocity& shift,
         const SolverParams& params) {
        std::vector<double> pot(static_cast<std::size_t>(psi0.grid.total_points()));
        copy_into(v, pot, "potential");
        return evolve(psi0, sys, pot, shift, params);
      },
      py::arg("psi0"), py::arg("system"), py::arg("potential"), py::arg("shift"),
      py::arg("params"),
      "Run the selected backend for params.steps of params.dt, recording "
      "states and observables every record_stride steps (0: first and last).");

  m.def("continuity_residual", &continuity_residual, py::arg("s0"), py::arg("s1"),
        py::arg("system"), py::arg("shift"),
        "Midpoint defect of the probability-transport equation for two "
        "recorded states one step apart; second order in the step.");

  py::class_<LapseProfile>(m, "LapseProfile")
      .def_static("constant", &LapseProfile::constant, py::arg("base"))
      .def_static("sinusoidal", &LapseProfile::sinusoidal, py::arg("base"),
                  py::arg("amp"), py::arg("freq"), py::arg("phase0") = 0.0)
      .def_readwrite("base", &LapseProfile::base)
      .def_readwrite("amp", &LapseProfile::amp)
      .def_readwrite("freq", &LapseProfile::freq)
      .def_readwrite("phase0", &LapseProfile::phase0)
      .def("__call__", &LapseProfile::operator(), py::arg("x0"));

  py::class_<ParametrizedRecord>(m, "ParametrizedRecord")
      .def_readonly("x0", &ParametrizedRecord::x0)
      .def_readonly("t", &ParametrizedRecord::t)
      .def_readonly("beta", &ParametrizedRecord::beta)
      .def_readonly("energy", &ParametrizedRecord::energy)
      .def_readonly("pi0", &ParametrizedRecord::pi0)
      .def_readonly("psi", &ParametrizedRecord::psi);

  py::class_<ParametrizedResult>(m, "ParametrizedResult")
      .def_readonly("records", &ParametrizedResult::records)
      .def_readonly("boundary_warnings", &ParametrizedResult::boundary_warnings);

  m.def(
      "parametrized_evolve",
      [](const WaveFunction& psi0, const ParticleSystem& sys,
         const CArray<double>& v, const ShiftVelocity& shift,
         const LapseProfile& lapse, double x0_start, double dx0,
         std::int64_t label_steps, const SolverParams& params) {
        std::vector<double> pot(static_cast<std::size_t>(psi0.grid.total_points()));
        copy_into(v, pot, "potential");
        return parametrized_evolve(psi0, sys, pot, shift, lapse, x0_start, dx0,
                                   label_steps, params);
      },
      py::arg("psi0"), py::arg("system"), py::arg("potential"), py::arg("shift"),
      py::arg("lapse"), py::arg("x0_start"), py::arg("dx0"), py::arg("label_steps"),
      py::arg("params"),
      "Evolve in label time with physical steps dt = lapse(x0) dx0; each "
      "record carries the label, physical time, lapse, energy, and pi0 = -H.");

  // --- best matching -----------------------------------------------------------
  py::enum_<BmMethod>(m, "BmMethod")
      .value("Analytic", BmMethod::Analytic)
      .value("Numerical", BmMethod::Numerical);

  py::class_<BestMatchResult>(m, "BestMatchResult")
      .def_readonly("shift", &BestMatchResult::shift)
      .def_readonly("mismatch", &BestMatchResult::mismatch)
      .def_readonly("cond_inertia", &BestMatchResult::cond_inertia)
      .def_readonly("method", &BestMatchResult::method)
      .def_readonly("nonconvex_warning", &BestMatchResult::nonconvex_warning)
      .def_readonly("iterations", &BestMatchResult::iterations);

  py::class_<SearchBox>(m, "SearchBox")
      .def_static("symmetric", &SearchBox::symmetric, py::arg("spatial_dim"),
                  py::arg("radius"))
      .def_readwrite("lo", &SearchBox::lo)
      .def_readwrite("hi", &SearchBox::hi);

  m.def("best_match_translation", &best_match_translation, py::arg("psi"),
        py::arg("system"), py::arg("potential") = std::vector<double>{},
        py::arg("probe_dt") = 1e-3,
        "Translational shift velocity minimizing the one-step mismatch: "
        "lambda_dot = P / M.");
  m.def("best_match_rotation", &best_match_rotation, py::arg("psi"),
        py::arg("system"), py::arg("potential") = std::vector<double>{},
        py::arg("probe_dt") = 1e-3, py::arg("center_tol") = 1e-6,
        "Translational plus rotational shift from the centered inertia solve; "
        "requires the center of mass at the origin.");
  m.def("numerical_best_match", &numerical_best_match, py::arg("psi"),
        py::arg("system"), py::arg("potential"), py::arg("dt"), py::arg("box"),
        py::arg("params") = SolverParams{},
        "Derivative-free minimization of the direct one-step mismatch over "
        "the shift components in the box.");
  m.def("galilean_boost", &galilean_boost, py::arg("psi"), py::arg("system"),
        py::arg("velocity"),
        "Multiply in the momentum phase for a uniform velocity per component.");
  m.def("translate", &translate, py::arg("psi"), py::arg("offsets"),
        "Rigid periodic translation by an offset per spatial component.");
  m.def("center_state", &center_state, py::arg("psi"), py::arg("system"),
        "Translate so the center of mass sits at the origin.");

  py::class_<ConstraintReport>(m, "ConstraintReport")
      .def_readonly("max_momentum_residual", &ConstraintReport::max_momentum_residual)
      .def_readonly("max_angular_residual", &ConstraintReport::max_angular_residual)
      .def_readonly("tolerance", &ConstraintReport::tolerance)
      .def_readonly("momentum_ok", &ConstraintReport::momentum_ok)
      .def_readonly("angular_ok", &ConstraintReport::angular_ok);

  m.def("constraint_check", &constraint_check, py::arg("series"), py::arg("system"),
        py::arg("shift"), py::arg("tolerance") = 1e-6,
        "Largest deviation of P - M lambda_dot and L - I zeta_dot across a "
        "recorded observable series.");

  // --- sampler -----------------------------------------------------------------
  py::class_<SamplerParams>(m, "SamplerParams")
      .def(py::init<>())
      .def_readwrite("record_stride", &SamplerParams::record_stride)
      .def_readwrite("fluctuation_scale", &SamplerParams::fluctuation_scale)
      .def_readwrite("density_floor_rel", &SamplerParams::density_floor_rel)
      .def_readwrite("flag_fraction", &SamplerParams::flag_fraction);

  py::class_<TrajectoryEnsemble>(m, "TrajectoryEnsemble")
      .def_readonly("chains", &TrajectoryEnsemble::chains)
      .def_readonly("dt", &TrajectoryEnsemble::dt)
      .def_readonly("seed", &TrajectoryEnsemble::seed)
      .def_readonly("times", &TrajectoryEnsemble::times)
      .def_readonly("clamp_count", &TrajectoryEnsemble::clamp_count)
      .def_readonly("total_steps", &TrajectoryEnsemble::total_steps)
      .def_readonly("flagged", &TrajectoryEnsemble::flagged)
      .def_readonly("grid", &TrajectoryEnsemble::grid)
      .def_property_readonly(
          "instants",
          [](const TrajectoryEnsemble& e) {
            return static_cast<std::int64_t>(e.positions.size());
          })
      .def(
          "positions_at",
          [](const TrajectoryEnsemble& e, std::int64_t instant) {
            if (instant < 0 ||
                static_cast<std::size_t>(instant) >= e.positions.size())
              throw ValidationError("instant out of range");
            const auto& flat = e.positions[static_cast<std::size_t>(instant)];
            const py::ssize_t d = e.grid.dim();
            py::array_t<double> out({static_cast<py::ssize_t>(e.chains), d});
            std::copy(flat.begin(), flat.end(), out.mutable_data());
            return out;
          },
          py::arg("instant"),
          "Walker positions at a recorded instant, shaped (chains, axes).");

  m.def("sample_ensemble", &sample_ensemble, py::arg("series"), py::arg("system"),
        py::arg("shift"), py::arg("chains"), py::arg("seed"),
        py::arg("params") = SamplerParams{},
        "Advance independent walkers against a recorded state series (one "
        "entry per solver step); bit-reproducible for a fixed seed at any "
        "thread count.");

  py::class_<DensityCompareReport>(m, "DensityCompareReport")
      .def_readonly("coarsen_factor", &DensityCompareReport::coarsen_factor)
      .def_readonly("big_bins", &DensityCompareReport::big_bins)
      .def_readonly("tv_distance", &DensityCompareReport::tv_distance)
      .def_readonly("chi_square", &DensityCompareReport::chi_square)
      .def_readonly("dof", &DensityCompareReport::dof)
      .def_readonly("p_value", &DensityCompareReport::p_value);

  m.def("ensemble_density_compare", &ensemble_density_compare, py::arg("ensemble"),
        py::arg("psi_final"),
        "Histogram the final instant against |psi|^2: total-variation "
        "distance and a chi-square tail over the coarsened bins.");

  py::class_<MaxEntProblem>(m, "MaxEntProblem")
      .def(py::init([](std::vector<double> lattice, double alpha, double dphi,
                       double kappa) {
             MaxEntProblem p;
             p.lattice = std::move(lattice);
             p.alpha = alpha;
             p.dphi = dphi;
             p.kappa = kappa;
             return p;
           }),
           py::arg("lattice"), py::arg("alpha"), py::arg("dphi"), py::arg("kappa"))
      .def_readwrite("lattice", &MaxEntProblem::lattice)
      .def_readwrite("alpha", &MaxEntProblem::alpha)
      .def_readwrite("dphi", &MaxEntProblem::dphi)
      .def_readwrite("kappa", &MaxEntProblem::kappa);

  py::class_<MaxEntSolution>(m, "MaxEntSolution")
      .def_readonly("p", &MaxEntSolution::p)
      .def_readonly("multiplier", &MaxEntSolution::multiplier)
      .def_readonly("alpha_prime", &MaxEntSolution::alpha_prime)
      .def_readonly("mean", &MaxEntSolution::mean)
      .def_readonly("variance", &MaxEntSolution::variance)
      .def_readonly("kl_to_analytic", &MaxEntSolution::kl_to_analytic)
      .def_readonly("iterations", &MaxEntSolution::iterations);

  m.def("maxent_transition_oracle", &maxent_transition_oracle, py::arg("problem"),
        "Exact lattice solution of the single-axis transition problem: "
        "maximize entropy subject to normalization and the drift constraint.");

  // --- checkpoints and threading -----------------------------------------------
  py::class_<Checkpoint>(m, "Checkpoint")
      .def_readonly("psi", &Checkpoint::psi)
      .def_readonly("system", &Checkpoint::system);

  m.def("write_checkpoint", &write_checkpoint, py::arg("psi"), py::arg("system"),
        py::arg("path"), "Binary state checkpoint with a payload checksum.");
  m.def("read_checkpoint", &read_checkpoint, py::arg("path"));

  m.def("set_thread_count", &set_thread_count, py::arg("n"),
        "Resize the worker pool used by the solvers and the sampler.");
}

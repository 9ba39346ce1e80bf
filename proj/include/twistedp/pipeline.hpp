#pragma once

// Configured end-to-end runs: surfaces at two resolutions, spectra, the square
// catenoid, the smoothing body, and a certificate with one claim per acceptance
// criterion.

#include "twistedp/jacobi_spectrum.hpp"
#include "twistedp/mesh_io.hpp"
#include "twistedp/smoothing.hpp"
#include "twistedp/surface_gen.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace twistedp {

enum class Target { schwarz_p, pullback, twisted, all };

const char* to_string(Target target);
Target parse_target(const std::string& text);

struct RunConfig {
    Target target = Target::all;
    int n = 32;
    int n_fine = 48;
    RelaxOptions relax;
    int k = 8;
    ZeroPolicy policy;
    double epsilon = 0.05;
    int samples = 4000;
    std::uint64_t seed = 1;
    std::string output_dir = "twistedp_out";
    bool write_artifacts = true;

    /// Throws invalid_argument on n < 16, n_fine <= n, k < 5 or non-positive tolerances.
    void validate() const;
    /// All fields, defaults included.
    std::string to_json() const;
};

/// Missing keys keep their defaults; unknown keys are an error.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);

/// 64-bit FNV-1a, as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

struct Claim {
    int criterion = 0;
    std::string id;          // "C1" ... "C10"
    std::string title;
    std::vector<std::pair<std::string, double>> measured;
    std::string target;
    std::string tolerance;
    std::string note;
    bool pass = false;
};

struct Certificate {
    RunConfig config;
    std::string config_hash;
    std::vector<std::pair<std::string, std::string>> environment;
    std::vector<Claim> claims;
    std::string timestamp;

    bool all_pass() const;
    const Claim* find(int criterion) const;
    /// Everything except the timestamp; identical across reruns of one config.
    std::string body_json() const;
    std::string to_json() const;
};

// ---------------------------------------------------------------------------
// Stages

struct SigmaStage {
    int n = 0;
    PeriodicMesh mesh;
    RelaxLog log;
};

/// Seed and relax the P surface in T^3(1/2).
SigmaStage build_sigma(int n, const RelaxOptions& relax);

struct TwistedStage {
    PeriodicMesh pullback;
    QuotientResult quotient;
};

TwistedStage build_twisted(const PeriodicMesh& sigma);

struct RefinementTable {
    std::string surface_id;
    int n_coarse = 0;
    int n_fine = 0;
    std::vector<double> differences;   // |lambda_i(coarse) - lambda_i(fine)|
    double e = 0;                      // max of differences
};

/// Throws invalid_argument for reports of different surfaces.
RefinementTable compare_refinements(const SpectrumReport& coarse, const SpectrumReport& fine, int count = 0);

/// Unit square [0,1]^2 split into 2 m^2 triangles, as a Dirichlet domain.
MeshWithBoundary calibration_square(int m);

std::string spectrum_json(const SpectrumReport& report);
std::string spectrum_csv(const SpectrumReport& report);
std::string smoothing_json(const SmoothingReport& report);

// ---------------------------------------------------------------------------
// Claims. Each returns one certificate entry; the spectral ones need both resolutions.

Claim claim_group_algebra();
Claim claim_singular_set();
Claim claim_topology_chain(const std::vector<std::pair<SigmaStage*, TwistedStage*>>& levels);
Claim claim_schwarz_spectrum(SpectrumReport& coarse, SpectrumReport& fine, const PeriodicMesh& coarse_mesh,
                             const ZeroPolicy& policy);
Claim claim_twisted_spectrum(SpectrumReport& coarse, SpectrumReport& fine, const SpectrumReport& sigma_coarse,
                             const ZeroPolicy& policy);
Claim claim_catenoid(const CatenoidResult& cat, SpectrumReport& coarse, SpectrumReport& fine,
                     const ZeroPolicy& policy);
Claim claim_integral_identities(const PeriodicMesh& sigma);
Claim claim_geometric_inventory(const PeriodicMesh& sigma);
Claim claim_smoothing(const SmoothingReport& report);
/// (index, nullity) of every classified pair must agree between resolutions.
Claim claim_refinement_stability(const std::vector<std::pair<const SpectrumReport*, const SpectrumReport*>>& pairs);

/// Runs the stages the target needs and writes meshes, spectra and the
/// certificate under config.output_dir. A failing stage leaves a FAILED marker
/// and rethrows with the stage named.
Certificate run(const RunConfig& config);

} // namespace twistedp

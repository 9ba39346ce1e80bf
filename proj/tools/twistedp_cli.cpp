#include "twistedp/error.hpp"
#include "twistedp/pipeline.hpp"
#include "twistedp/symmetry_analysis.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

using namespace twistedp;

namespace {

void print_spectrum(const SpectrumReport& r)
{
    std::printf("%s n=%d (%s, %s)\n", r.surface_id.c_str(), r.resolution, to_string(r.kind),
                r.method == EigenMethod::dense ? "dense" : "shift-invert");
    for (int i = 0; i < r.eigenvalues.size(); ++i) {
        std::printf("  lambda_%d = %.10g\n", i, r.eigenvalues[i]);
    }
    if (r.index >= 0) {
        std::printf("  index %d  nullity %d  delta %.4g  e %.4g%s\n", r.index, r.nullity, r.delta, r.refinement_error,
                    r.ambiguous ? "  (ambiguous)" : "");
    }
}

void print_claims(const Certificate& cert)
{
    for (const auto& c : cert.claims) {
        std::printf("%-4s %s  %s\n", c.id.c_str(), c.pass ? "PASS" : "FAIL", c.title.c_str());
        if (!c.note.empty()) {
            std::printf("       %s\n", c.note.c_str());
        }
    }
}

int run_groups(bool json_out)
{
    const CrystalGroup G = i222(), H = immm();
    if (json_out) {
        Certificate cert;
        cert.claims = {claim_group_algebra(), claim_singular_set()};
        std::cout << cert.body_json() << '\n';
        return cert.all_pass() ? 0 : 1;
    }
    std::cout << group_table(H) << '\n';
    for (const auto& g : H.elements()) {
        const FixedLocus f = fixed_locus(g);
        std::printf("%-28s %-17s %s (%zu)\n", g.to_string().c_str(), to_string(classify(g)), to_string(f.kind),
                    f.components.size());
    }
    const SingularSet s = singular_set(G);
    std::printf("singular set of I222: %zu lines, quotient net %d edges / %d vertices\n", s.lines.size(),
                s.quotient.edges, s.quotient.vertices);
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Schwarz P, its twisted quotient in RP^3(1/2), and the smoothing body"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string target = "all", config_path, format = "obj", surface = "sigma";
    bool json_out = false;

    auto add_mesh_flags = [&](CLI::App* sub) {
        sub->add_option("--n", cfg.n, "grid resolution")->check(CLI::Range(16, 512));
        sub->add_option("--tol", cfg.relax.tol, "relaxation tolerance on max|H| * mean edge");
        sub->add_option("--max-iter", cfg.relax.max_iter, "relaxation iteration limit");
        sub->add_option("--out", cfg.output_dir, "output directory");
    };
    auto add_spectral_flags = [&](CLI::App* sub) {
        sub->add_option("--n-fine", cfg.n_fine, "finer resolution for the refinement error");
        sub->add_option("--k", cfg.k, "eigenpairs");
        sub->add_option("--zero-factor", cfg.policy.factor, "delta = factor * e");
        sub->add_option("--zero-floor", cfg.policy.relative_floor, "floor on delta relative to |lambda_0|");
    };

    auto* groups = app.add_subcommand("groups", "group tables, motion kinds and the singular set");
    groups->add_flag("--json", json_out, "claims as JSON");

    auto* generate_cmd = app.add_subcommand("generate", "seed, relax and export the P surface");
    add_mesh_flags(generate_cmd);
    generate_cmd->add_option("--format", format, "obj or ply")->check(CLI::IsMember({"obj", "ply"}));

    auto* quotient_cmd = app.add_subcommand("quotient", "pullback to T^3(1) and quotient by I222");
    add_mesh_flags(quotient_cmd);

    auto* spectrum_cmd = app.add_subcommand("spectrum", "Jacobi spectrum with index and nullity");
    add_mesh_flags(spectrum_cmd);
    add_spectral_flags(spectrum_cmd);
    spectrum_cmd->add_option("--surface", surface, "sigma or twisted")->check(CLI::IsMember({"sigma", "twisted"}));

    auto* catenoid_cmd = app.add_subcommand("catenoid", "square catenoid and its Dirichlet spectrum");
    add_mesh_flags(catenoid_cmd);
    add_spectral_flags(catenoid_cmd);

    auto* smoothing_cmd = app.add_subcommand("smoothing", "pieces, gluing and dilation of E_eps");
    smoothing_cmd->add_option("--epsilon", cfg.epsilon, "tube radius")->check(CLI::PositiveNumber);
    smoothing_cmd->add_option("--samples", cfg.samples, "sample count")->check(CLI::PositiveNumber);
    smoothing_cmd->add_option("--seed", cfg.seed, "sampling seed");

    auto* certify = app.add_subcommand("certify", "full pipeline; exit code 0 iff every claim passes");
    certify->add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    certify->add_option("--target", target, "schwarz_p, pullback, twisted or all");
    add_mesh_flags(certify);
    add_spectral_flags(certify);
    certify->add_option("--epsilon", cfg.epsilon, "tube radius");
    certify->add_option("--samples", cfg.samples, "smoothing sample count");
    certify->add_option("--seed", cfg.seed, "sampling seed");
    certify->add_flag("--no-artifacts", [&](std::int64_t) { cfg.write_artifacts = false; }, "certificate only");

    CLI11_PARSE(app, argc, argv);

    try {
        if (groups->parsed()) {
            return run_groups(json_out);
        }
        if (smoothing_cmd->parsed()) {
            const SmoothingReport r = smoothing_report(cfg.epsilon, cfg.samples, cfg.seed);
            std::cout << smoothing_json(r);
            return claim_smoothing(r).pass ? 0 : 1;
        }
        if (certify->parsed()) {
            if (!config_path.empty()) {
                const RunConfig file = load_config(config_path);
                // flags given on the command line override the file
                RunConfig merged = file;
                for (const auto* opt : certify->get_options()) {
                    if (opt->count() == 0) {
                        continue;
                    }
                    const std::string name = opt->get_name();
                    if (name == "--n") merged.n = cfg.n;
                    if (name == "--n-fine") merged.n_fine = cfg.n_fine;
                    if (name == "--k") merged.k = cfg.k;
                    if (name == "--tol") merged.relax.tol = cfg.relax.tol;
                    if (name == "--max-iter") merged.relax.max_iter = cfg.relax.max_iter;
                    if (name == "--out") merged.output_dir = cfg.output_dir;
                    if (name == "--epsilon") merged.epsilon = cfg.epsilon;
                    if (name == "--samples") merged.samples = cfg.samples;
                    if (name == "--seed") merged.seed = cfg.seed;
                    if (name == "--zero-factor") merged.policy.factor = cfg.policy.factor;
                    if (name == "--zero-floor") merged.policy.relative_floor = cfg.policy.relative_floor;
                    if (name == "--target") merged.target = parse_target(target);
                    if (name == "--no-artifacts") merged.write_artifacts = false;
                }
                cfg = merged;
            } else {
                cfg.target = parse_target(target);
            }
            const Certificate cert = run(cfg);
            print_claims(cert);
            if (cfg.write_artifacts) {
                std::printf("certificate: %s\n", (std::filesystem::path(cfg.output_dir) / "certificate.json").c_str());
            }
            return cert.all_pass() ? 0 : 1;
        }

        cfg.n_fine = std::max(cfg.n_fine, cfg.n + 2);
        if (spectrum_cmd->parsed() || catenoid_cmd->parsed()) {
            cfg.validate();
        }
        const std::filesystem::path dir = cfg.output_dir;
        std::filesystem::create_directories(dir);
        const SigmaStage sigma = build_sigma(cfg.n, cfg.relax);
        const Topology t = topology(sigma.mesh);
        std::printf("P surface n=%d: V=%d F=%d chi=%d genus=%d area=%.10g residual=%.3g after %d iterations\n", cfg.n,
                    sigma.mesh.vertex_count(), sigma.mesh.face_count(), t.euler, t.genus, total_area(sigma.mesh),
                    sigma.log.residuals.empty() ? 0.0 : sigma.log.residuals.back(), sigma.log.iterations);

        if (generate_cmd->parsed()) {
            const std::string name = "sigma_n" + std::to_string(cfg.n) + (format == "obj" ? ".obj" : ".ply");
            export_mesh(sigma.mesh, dir / name, format == "obj" ? MeshFormat::obj_sidecar : MeshFormat::ply);
            std::printf("wrote %s\n", (dir / name).c_str());
            return 0;
        }
        if (quotient_cmd->parsed()) {
            const TwistedStage tw = build_twisted(sigma.mesh);
            const Topology tp = topology(tw.pullback), tq = topology(tw.quotient.mesh);
            std::printf("pullback: V=%d chi=%d genus=%d\n", tw.pullback.vertex_count(), tp.euler, tp.genus);
            std::printf("twisted:  V=%d chi=%d genus=%d orientable=%d singular margin=%.6g\n",
                        tw.quotient.mesh.vertex_count(), tq.euler, tq.genus, tq.orientable, tw.quotient.singular_margin);
            export_mesh(tw.pullback, dir / ("pullback_n" + std::to_string(cfg.n) + ".obj"), MeshFormat::obj_sidecar);
            export_mesh(tw.quotient.mesh, dir / ("twisted_n" + std::to_string(cfg.n) + ".obj"), MeshFormat::obj_sidecar);
            return 0;
        }

        const SigmaStage fine = build_sigma(cfg.n_fine, cfg.relax);
        if (spectrum_cmd->parsed()) {
            SpectrumReport a, b;
            if (surface == "sigma") {
                a = spectrum(sigma.mesh, cfg.k);
                b = spectrum(fine.mesh, cfg.k);
            } else {
                a = spectrum(build_twisted(sigma.mesh).quotient.mesh, cfg.k);
                b = spectrum(build_twisted(fine.mesh).quotient.mesh, cfg.k);
            }
            a.surface_id = b.surface_id = surface;
            a.resolution = cfg.n;
            b.resolution = cfg.n_fine;
            const RefinementTable tab = compare_refinements(a, b);
            index_nullity(a, tab.e, cfg.policy);
            index_nullity(b, tab.e, cfg.policy);
            if (surface == "sigma" && a.nullity > 0) {
                kernel_match(a, sigma.mesh);
                std::printf("kernel angle vs normals: %.4g rad\n", a.kernel_match_angle);
            }
            print_spectrum(a);
            print_spectrum(b);
            for (const auto* r : {&a, &b}) {
                const std::string base = "spectrum_" + surface + "_n" + std::to_string(r->resolution);
                std::ofstream(dir / (base + ".json")) << spectrum_json(*r);
                std::ofstream(dir / (base + ".csv")) << spectrum_csv(*r);
            }
            return 0;
        }
        if (catenoid_cmd->parsed()) {
            const CatenoidResult ca = extract_catenoid(sigma.mesh), cb = extract_catenoid(fine.mesh);
            SpectrumReport a = dirichlet_spectrum(ca.annulus, cfg.k), b = dirichlet_spectrum(cb.annulus, cfg.k);
            a.surface_id = b.surface_id = "catenoid";
            a.resolution = cfg.n;
            b.resolution = cfg.n_fine;
            const Claim c = claim_catenoid(ca, a, b, cfg.policy);
            print_spectrum(a);
            print_spectrum(b);
            for (const auto& [k, v] : c.measured) {
                std::printf("  %-28s %.10g\n", k.c_str(), v);
            }
            export_mesh(ca.annulus.mesh, dir / ("catenoid_n" + std::to_string(cfg.n) + ".obj"), MeshFormat::obj_sidecar);
            return 0;
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}

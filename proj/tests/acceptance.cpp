// Runs the full pipeline at n = 32 / 48 and prints one verdict line per
// acceptance criterion. Exit status 0 iff all ten pass.

#include "twistedp/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <string>

using namespace twistedp;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string summary(const Claim& c)
{
    std::string s;
    for (const auto& [k, v] : c.measured) {
        if (s.size() > 150) {
            s += " ...";
            break;
        }
        char buf[96];
        std::snprintf(buf, sizeof buf, "%s%s=%.6g", s.empty() ? "" : " ", k.c_str(), v);
        s += buf;
    }
    return s;
}

} // namespace

int main(int argc, char** argv)
{
    RunConfig config;
    config.target = Target::all;
    config.n = 32;
    config.n_fine = 48;
    config.output_dir =
        argc > 1 ? argv[1] : (std::filesystem::temp_directory_path() / "twistedp_acceptance").string();

    auto t0 = std::chrono::steady_clock::now();
    const Claim groups = claim_group_algebra();
    const double groups_time = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    const Claim smoothing = claim_smoothing(smoothing_report(config.epsilon, config.samples, config.seed));
    const double smoothing_time = seconds_since(t0);

    Certificate cert;
    std::string failure;
    t0 = std::chrono::steady_clock::now();
    try {
        cert = run(config);
    } catch (const std::exception& e) {
        failure = e.what();
    }
    const double run_time = seconds_since(t0);

    int passed = 0;
    for (int criterion = 1; criterion <= 10; ++criterion) {
        const Claim* c = cert.find(criterion);
        if (!c) {
            std::printf("criterion %2d  FAIL  no claim (%s)\n", criterion, failure.empty() ? "missing" : failure.c_str());
            continue;
        }
        bool pass = c->pass;
        std::string extra;
        if (criterion == 1) {
            pass = pass && groups.pass && groups_time < 1.0;
            extra = " time=" + std::to_string(groups_time) + "s";
        } else if (criterion == 9) {
            pass = pass && smoothing.pass && smoothing_time < 10.0;
            extra = " time=" + std::to_string(smoothing_time) + "s";
        }
        passed += pass;
        std::printf("criterion %2d  %s  %s: %s%s\n", criterion, pass ? "PASS" : "FAIL", c->title.c_str(),
                    summary(*c).c_str(), extra.c_str());
    }
    std::printf("%d/10 criteria pass (pipeline %.1f s, artifacts in %s)\n", passed, run_time,
                config.output_dir.c_str());
    return passed == 10 ? 0 : 1;
}

// Acceptance suite runner: one pass/fail line per criterion, nonzero exit on
// any failure.

#include "fbl/verify.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

int main(int argc, char** argv) {
    fbl::VerifyOptions opts;
    opts.workers = 4;
    for (int i = 1; i < argc; ++i) {
        if (!std::strcmp(argv[i], "--seed") && i + 1 < argc)
            opts.seed = std::strtoul(argv[++i], nullptr, 10);
        else if (!std::strcmp(argv[i], "--workers") && i + 1 < argc)
            opts.workers = std::atoi(argv[++i]);
        else if (!std::strcmp(argv[i], "--convention") && i + 1 < argc)
            opts.convention = fbl::NConvention::from_name(argv[++i]);
    }

    const auto results = fbl::run_acceptance_suite(opts);
    bool all_pass = true;
    for (const auto& r : results) {
        std::printf("[%s] criterion %d: %s (%.2fs) %s\n", r.pass ? "PASS" : "FAIL", r.id,
                    r.name.c_str(), r.seconds, r.pass ? "" : r.details.c_str());
        all_pass = all_pass && r.pass;
    }
    std::printf("%s\n", all_pass ? "acceptance: ALL CRITERIA PASS"
                                 : "acceptance: FAILURES PRESENT");
    return all_pass ? 0 : 1;
}

// Acceptance gate runner: prints one line per check and exits nonzero if any
// check fails. Kept free of any test framework so the output is exactly the
// fifteen verdict lines.

#include <infdyn/acceptance.hpp>

#include <cstdio>

int main() {
    setvbuf(stdout, nullptr, _IONBF, 0);
    auto checks = infdyn::run_acceptance();
    int failed = 0;
    for (const auto& c : checks) {
        std::printf("[%s] %2d. %s — %s\n", c.passed ? "PASS" : "FAIL", c.id, c.name.c_str(),
                    c.detail.c_str());
        if (!c.passed) ++failed;
    }
    std::printf("%d/%zu acceptance checks passed\n", static_cast<int>(checks.size()) - failed,
                checks.size());
    return failed == 0 ? 0 : 1;
}

// Semi-analytical BER of the three linear detectors for a 4x16 uplink, plus
// a short Monte Carlo check of the simplified MMSE receiver.

#include <cstdio>

#include "scfde/analysis.hpp"
#include "scfde/montecarlo.hpp"

int main() {
    using namespace scfde;
    auto cfg = make_scenario(4, 16, QamScheme{2});
    const std::vector<double> grid{0.0, 2.0, 4.0, 6.0, 8.0};

    std::printf("%8s %12s %12s %12s %12s\n", "Eb/N0", "MF", "SimpMMSE", "ExactMMSE", "SIMO/AWGN");
    const auto mf = semi_analytical_ber(cfg, DetectorKind::MF, grid, 50);
    const auto smmse = semi_analytical_ber(cfg, DetectorKind::SimplifiedMMSE, grid, 50);
    const auto emmse = semi_analytical_ber(cfg, DetectorKind::ExactMMSE, grid, 50);
    for (std::size_t g = 0; g < grid.size(); ++g)
        std::printf("%8.1f %12.3e %12.3e %12.3e %12.3e\n", grid[g], mf.points[g].aggregate,
                    smmse.points[g].aggregate, emmse.points[g].aggregate,
                    simo_awgn_mfb(QamScheme{2}, cfg.n_r, cfg.eta(), grid[g]));

    McConfig mc;
    mc.max_blocks = 200;
    const auto sim = run_mc_linear(cfg, DetectorKind::SimplifiedMMSE, grid, mc, 1);
    std::printf("\nMonte Carlo, simplified MMSE\n");
    for (const auto& p : sim.points)
        std::printf("%8.1f %12.3e  (%llu errors in %zu blocks)\n", p.x, p.aggregate,
                    static_cast<unsigned long long>(p.n_errors), p.count);
}

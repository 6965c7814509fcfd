// Local masses of AdS-Schwarzschild and of a C0 kink across radii.
#include <cstdio>

#include "hypmass/massfun.hpp"

using namespace hypmass;

int main() {
    const auto phi = bump_cutoff();
    const auto ads = schwarzschild_ads(0.1, 3);
    std::printf("AdS-Schwarzschild, n = 3, m = 0.1\n%8s %14s %14s %14s\n", "r", "M_C2(r)", "M_C0 lifted", "M_C0 literal");
    std::vector<double> radii{10, 20, 50, 100, 200, 500, 1000}, c2;
    for (double r : radii) {
        c2.push_back(mass_c2(ads, r));
        std::printf("%8g %14.10f %14.10f %14.10f\n", r, c2.back(), mass_c0(ads, phi, r).mass_c0,
                    mass_c0_literal(ads, phi, r).mass_c0);
    }
    const auto aspect = fit_mass_aspect(radii, c2);
    std::printf("limit %.10f, order %.3f (%s); 2(n-1) omega m = %.10f\n\n", aspect.extrapolated_limit,
                aspect.convergence_order, to_string(aspect.status), 2 * 2 * sphere_volume(3) * 0.1);

    const auto kink = c0_kink(0.05, 3.0, std::exp(1.0), 3);
    std::printf("C0 kink, tau = 3 (M_C2 undefined)\n%8s %14s\n", "r", "M_C0");
    for (double r : radii) std::printf("%8g %14.6e\n", r, mass_c0(kink, phi, r).mass_c0);
    return 0;
}

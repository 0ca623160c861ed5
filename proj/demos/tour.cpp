// A short walk through the library on small hand-checkable inputs.
#include <rkhs_lab/rkhs_lab.hpp>

#include <cstdio>

using namespace rkhs_lab;

int main()
{
    // f(z1, z2) = z1^2 z2 at the pair ([[l, 2], [0, l]], [[g, 1], [0, g]])
    const cplx l = 0.3, g = cplx(0, 0.4);
    CMatrix a(2, 2), b(2, 2);
    a << l, 2.0, 0.0, l;
    b << g, 1.0, 0.0, g;
    MatrixTuple pair({a, b});
    PolySeries f(2, 3);
    f.add({2, 1}, 1.0);
    CMatrix fa = eval_poly(pair, f);
    std::printf("f(A) = [[%.4f%+.4fi, %.4f%+.4fi], [0, %.4f%+.4fi]]\n", fa(0, 0).real(), fa(0, 0).imag(), fa(0, 1).real(),
                fa(0, 1).imag(), fa(1, 1).real(), fa(1, 1).imag());
    std::printf("contour quadrature differs by %.2e\n", (eval_cauchy(pair, f, 64) - fa).cwiseAbs().maxCoeff());

    // interpolate 0 -> 0, 0.5 -> 0.25 on the disc, then extend to 0.2i
    auto p = InterpolationProblem::scalar({0.0, 0.5}, {0.0, 0.25});
    auto n = min_norm_onevar(p);
    std::printf("minimal interpolant norm %.6f (Pick matrix psd: %s)\n", n.value,
                is_psd(pick_matrix_scalar({0.0, 0.5}, {0.0, 0.25})) ? "yes" : "no");
    auto e = one_step_extension(p, {cplx(0, 0.2)});
    std::printf("extension value w = %.6f%+.6fi keeps norm %.6f\n", e.w.real(), e.w.imag(), e.extended_norm);

    // two nilpotent NC points whose products alpha * beta approach each other
    for (double beta : {0.2, 0.4, 0.52, 0.53}) {
        auto o = nilpotent_pair_oracle({0.9, 0.6}, {beta, 0.8});
        std::printf("alpha1 beta1 = %.3f vs 0.480: NC Riesz lower %.3e, Szego pair lower %.3e\n", 0.9 * beta, o.riesz.lower,
                    o.szego_riesz.lower);
    }
    return 0;
}

#pragma once

#include <array>
#include <cstddef>

namespace sdflow {

// Quadrature rules on the unit interval [0,1].

// Two-point Gauss rule, exact for cubics. Sufficient for the piecewise
// linear-in-xi integrands appearing in the element mass terms.
struct Gauss2 {
    static constexpr std::array<double, 2> nodes = {
        0.21132486540518711775, 0.78867513459481288225};
    static constexpr std::array<double, 2> weights = {0.5, 0.5};
};

// 32-point Gauss-Legendre rule. Used as the fallback for the time integrals
// of 1/|g(t)|-type kernels when the closed forms lose accuracy (nearly
// stationary edge vector), where the integrand is analytic with singularities
// far outside [0,1] and the rule converges past double precision.
struct Gauss32 {
    static constexpr std::array<double, 32> nodes = {
        0.00136806907525921822751, 0.00719424422736583229991,
        0.0176188722062467846131,  0.0325469620311301554145,
        0.0518394221169739380173,  0.0753161931337150149332,
        0.102758102016028796518,   0.133908940629855159806,
        0.168477866534892399512,   0.20614212137961883548,
        0.246550045533885304988,   0.289324361934682327318,
        0.33406569885893617511,    0.380356318873931462728,
        0.427764019208601753257,   0.475846167156130841883,
        0.524153832843869158117,   0.572235980791398246743,
        0.619643681126068537272,   0.66593430114106382489,
        0.710675638065317672682,   0.753449954466114695012,
        0.79385787862038116452,    0.831522133465107600488,
        0.866091059370144840194,   0.897241897983971203482,
        0.924683806866284985067,   0.948160577883026061983,
        0.967453037968869844585,   0.982381127793753215387,
        0.9928057557726341677,     0.998631930924740781772};
    static constexpr std::array<double, 32> weights = {
        0.0035093050047350483002,  0.00813719736545283530259,
        0.0126960326546310297279,  0.0171369314565107165513,
        0.0214179490111133403284,  0.0254990296311880880981,
        0.0293420467392677735726,  0.0329111113881809234188,
        0.0361728970544242531127,  0.0390969478935351532359,
        0.0416559621134733776111,  0.0438260465022019055714,
        0.0455869393478819423564,  0.0469221995404022828196,
        0.0478193600396374297095,  0.0482700442573639002834,
        0.0482700442573639002834,  0.0478193600396374297095,
        0.0469221995404022828196,  0.0455869393478819423564,
        0.0438260465022019055714,  0.0416559621134733776111,
        0.0390969478935351532359,  0.0361728970544242531127,
        0.0329111113881809234188,  0.0293420467392677735726,
        0.0254990296311880880981,  0.0214179490111133403284,
        0.0171369314565107165513,  0.0126960326546310297279,
        0.00813719736545283530259, 0.0035093050047350483002};
};

template <class Rule, class F>
double integrate_unit(F&& f) {
    double acc = 0.0;
    for (std::size_t i = 0; i < Rule::nodes.size(); ++i)
        acc += Rule::weights[i] * f(Rule::nodes[i]);
    return acc;
}

}  // namespace sdflow

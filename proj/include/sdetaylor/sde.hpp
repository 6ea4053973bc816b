#pragma once

#include "sdetaylor/expr.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace sdetaylor {

enum class Calculus { Ito, Stratonovich };

std::string toString(Calculus c);

/// An autonomous SDE problem: dimension d, noise dimension m, drift a,
/// diffusion matrix b, functional f, initial value x0, and the calculus the
/// noise integral is read in. For Stratonovich problems `drift` holds the
/// Stratonovich drift as written in the equation.
struct SdeSpec {
    int d = 1;
    int m = 1;
    std::vector<Expr> drift;                 // a^1..a^d
    std::vector<std::vector<Expr>> diffusion; // [i][j] = b^{i,j}, d x m
    Expr functional;                          // f
    std::vector<double> x0;
    Calculus calculus = Calculus::Ito;

    SdeSpec() : functional(Expr::constant(0.0)) {}

    /// Checks dimensions and that every expression only references x1..xd.
    /// Throws DimensionError / UnknownVariable.
    void validate() const;
};

/// Parses the line-oriented key=value problem format:
///
///   d = 2
///   m = 1
///   calculus = ito            # or stratonovich
///   a1 = <expr> ... ad = <expr>
///   b1_1 = <expr> ... bd_m = <expr>   (missing entries default to 0)
///   f = <expr>
///   x0 = v1, v2, ..., vd
///
/// '#' starts a comment. Throws ParseError with a position that encodes the
/// line number.
SdeSpec parseSpec(std::istream& in);
SdeSpec parseSpecString(const std::string& text);
SdeSpec loadSpecFile(const std::string& path);

} // namespace sdetaylor

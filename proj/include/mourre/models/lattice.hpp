#pragma once

#include "mourre/operator.hpp"

namespace mourre {

// Dirichlet lattice Laplacian with the symmetrized central-difference dilation generator.
struct LatticeDilationPair {
    int sites = 64;
    double spacing = 1.0;
    HermitianOperator H;  // -Delta_h
    HermitianOperator A;  // (XP + PX) / 2
    Mat X;
    Mat P;                // -i D, D central difference

    RVec positions() const {
        RVec x(sites);
        for (int j = 0; j < sites; ++j) x(j) = (j - 0.5 * (sites - 1)) * spacing;
        return x;
    }
};

inline LatticeDilationPair build_lattice_pair(int sites = 64, double spacing = 1.0) {
    if (sites < 16) throw DimensionMismatch("lattice needs at least 16 sites");
    if (!(spacing > 0)) throw DimensionMismatch("lattice spacing must be positive");
    LatticeDilationPair p;
    p.sites = sites;
    p.spacing = spacing;
    const double a2 = spacing * spacing;
    Mat H = Mat::Zero(sites, sites), D = Mat::Zero(sites, sites), X = Mat::Zero(sites, sites);
    for (int j = 0; j < sites; ++j) {
        H(j, j) = 2.0 / a2;
        if (j + 1 < sites) {
            H(j, j + 1) = H(j + 1, j) = -1.0 / a2;
            D(j, j + 1) = 1.0 / (2.0 * spacing);
            D(j + 1, j) = -1.0 / (2.0 * spacing);
        }
        X(j, j) = (j - 0.5 * (sites - 1)) * spacing;
    }
    p.X = X;
    p.P = -I_unit * D;
    p.H = HermitianOperator(H);
    p.A = HermitianOperator(hermitize(Mat(0.5 * (X * p.P + p.P * X))));
    return p;
}

}  // namespace mourre

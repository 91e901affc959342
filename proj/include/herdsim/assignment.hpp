#pragma once

#include <span>
#include <vector>

#include "herdsim/geometry.hpp"
#include "herdsim/vec2.hpp"

namespace herdsim {

// Shortest tangent-line/arc path around circular obstacles, plus the
// quadratic slot-assignment program solved at every pursuit-circle update.

struct PathEstimate {
    std::vector<Vec2> polyline;  // straight segments; arcs flattened at <= 0.01 rad
    double length = 0.0;         // arc length of the polyline
    double travel_time = 0.0;    // length / speed
};

// Shortest path from start to goal treating every obstacle (at `at_time`) as a
// closed disc. Tangential contact with obstacle boundaries is allowed. Falls
// back to the straight segment when it is unobstructed.
// Throws std::invalid_argument if start or goal lies strictly inside an
// obstacle or speed <= 0, and std::runtime_error if no path exists.
PathEstimate shortest_path(const Vec2& start, const Vec2& goal,
                           std::span<const Obstacle> obstacles, double speed,
                           double at_time = 0.0);

// Arc length of p1 spent within `clearance` of p2, measured on a fixed 5 cm
// discretization of p1.
double overlap_length(const PathEstimate& p1, const PathEstimate& p2, double clearance);

struct AssignmentProblem {
    int n = 0;
    std::vector<double> travel_times;  // n*n, row-major: T(i,j) = [i*n + j]
    std::vector<double> overlaps;      // n^4: S(i,j,i2,j2) = [((i*n+j)*n+i2)*n + j2]
    double overlap_weight = 1.0;       // meters-to-seconds exchange rate for overlaps

    double travel(int i, int j) const { return travel_times[static_cast<size_t>(i) * n + j]; }
    double overlap(int i, int j, int i2, int j2) const {
        return overlaps[((static_cast<size_t>(i) * n + j) * n + i2) * n + j2];
    }
    void set_travel(int i, int j, double v) { travel_times[static_cast<size_t>(i) * n + j] = v; }
    void set_overlap(int i, int j, int i2, int j2, double v) {
        overlaps[((static_cast<size_t>(i) * n + j) * n + i2) * n + j2] = v;
    }
    static AssignmentProblem zero(int n);
};

struct Assignment {
    std::vector<int> perm;  // defender i -> slot perm[i]
    double objective = 0.0;
};

// The one canonical objective: sum_i T(i, perm[i])
//   + overlap_weight * sum_{i<i2} S(i, perm[i], i2, perm[i2]).
double assignment_objective(const AssignmentProblem& problem, std::span<const int> perm);

// Exact branch-and-bound enumeration for n <= 12 (lexicographically smallest
// permutation wins ties); greedy construction plus 2-swap descent above.
// Throws std::invalid_argument on inconsistent matrix sizes or negative
// overlap entries.
Assignment solve_assignment(const AssignmentProblem& problem);

// Builds the assignment program from an n x n grid of candidate paths
// (paths[i][j] = defender i to slot j).
AssignmentProblem build_assignment_problem(const std::vector<std::vector<PathEstimate>>& paths,
                                           double clearance, double overlap_weight);

}  // namespace herdsim

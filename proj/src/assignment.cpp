#include "herdsim/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

namespace herdsim {

namespace {

constexpr double kContactSlack = 1e-9;  // tangential contact allowance
constexpr double kArcStep = 0.01;       // max radians per flattened arc chord

struct Disc {
    Vec2 center;
    double radius;
};

bool segment_clear(const Vec2& a, const Vec2& b, const std::vector<Disc>& discs) {
    for (const Disc& d : discs) {
        if (point_segment_distance(d.center, a, b) < d.radius - kContactSlack) return false;
    }
    return true;
}

bool point_clear(const Vec2& p, const std::vector<Disc>& discs, int skip) {
    for (size_t k = 0; k < discs.size(); ++k) {
        if (static_cast<int>(k) == skip) continue;
        if (distance(p, discs[k].center) < discs[k].radius - kContactSlack) return false;
    }
    return true;
}

double wrap_positive(double a) {
    while (a < 0.0) a += 2.0 * kPi;
    while (a >= 2.0 * kPi) a -= 2.0 * kPi;
    return a;
}

struct Node {
    Vec2 pos;
    int disc = -1;      // -1 for the two endpoints
    double angle = 0.0; // position angle on the disc, in [0, 2pi)
};

struct EdgeOut {
    int to;
    double weight;
    int arc_disc = -1;  // -1: straight segment; else ccw arc on this disc
    double a0 = 0.0, a1 = 0.0;  // ccw arc span, a1 > a0
    bool arc_reversed = false;  // true: traverse the span cw (a1 -> a0)
};

// Tangent angles phi on circle (c, r) such that the line through the tangent
// point c + r*u(phi) with direction perpendicular to u(phi) passes through p:
// <p - c, u(phi)> = r.
bool point_tangent_angles(const Vec2& p, const Vec2& c, double r, double out[2]) {
    const Vec2 d = p - c;
    const double dist = d.norm();
    if (dist < r - kContactSlack) return false;  // inside: no tangent
    const double base = std::atan2(d.y, d.x);
    const double off = std::acos(std::clamp(r / std::max(dist, r), -1.0, 1.0));
    out[0] = wrap_positive(base + off);
    out[1] = wrap_positive(base - off);
    return true;
}

void flatten_arc(const Vec2& c, double r, double a0, double a1, std::vector<Vec2>& out,
                 bool include_first) {
    const double span = a1 - a0;
    const int steps = std::max(1, static_cast<int>(std::ceil(span / kArcStep)));
    for (int k = include_first ? 0 : 1; k <= steps; ++k) {
        const double a = a0 + span * k / steps;
        out.push_back(c + Vec2{r * std::cos(a), r * std::sin(a)});
    }
}

double arc_chord_length(double r, double span) {
    const int steps = std::max(1, static_cast<int>(std::ceil(span / kArcStep)));
    return steps * 2.0 * r * std::sin(span / (2.0 * steps));
}

PathEstimate straight_path(const Vec2& a, const Vec2& b, double speed) {
    PathEstimate p;
    p.polyline = {a, b};
    p.length = distance(a, b);
    p.travel_time = p.length / speed;
    return p;
}

}  // namespace

PathEstimate shortest_path(const Vec2& start, const Vec2& goal,
                           std::span<const Obstacle> obstacles, double speed,
                           double at_time) {
    if (!(speed > 0.0)) throw std::invalid_argument("shortest_path: speed must be positive");
    std::vector<Disc> discs;
    discs.reserve(obstacles.size());
    for (const Obstacle& o : obstacles) {
        if (o.radius <= 0.0) continue;
        discs.push_back({o.position_at(at_time), o.radius});
    }
    for (const Disc& d : discs) {
        if (distance(start, d.center) < d.radius - kContactSlack)
            throw std::invalid_argument("shortest_path: start lies inside an obstacle");
        if (distance(goal, d.center) < d.radius - kContactSlack)
            throw std::invalid_argument("shortest_path: goal lies inside an obstacle");
    }
    if (distance(start, goal) < 1e-12) {
        PathEstimate p;
        p.polyline = {start, goal};
        p.length = 0.0;
        p.travel_time = 0.0;
        return p;
    }
    if (segment_clear(start, goal, discs)) return straight_path(start, goal, speed);

    // Tangent visibility graph: endpoints, point-circle tangent points, and the
    // four bitangent constructions per disc pair; arcs connect tangent points
    // that share a disc.
    std::vector<Node> nodes;
    nodes.push_back({start, -1, 0.0});
    nodes.push_back({goal, -1, 0.0});
    const int m = static_cast<int>(discs.size());

    auto add_disc_node = [&](int disc, double angle) {
        const Vec2 p = discs[disc].center +
                       Vec2{discs[disc].radius * std::cos(angle), discs[disc].radius * std::sin(angle)};
        if (!point_clear(p, discs, disc)) return;
        for (const Node& n : nodes) {
            if (n.disc == disc && std::abs(wrap_angle(n.angle - angle)) < 1e-12) return;
        }
        nodes.push_back({p, disc, wrap_positive(angle)});
    };

    for (int endpoint = 0; endpoint < 2; ++endpoint) {
        const Vec2 p = nodes[endpoint].pos;
        for (int k = 0; k < m; ++k) {
            double ang[2];
            if (point_tangent_angles(p, discs[k].center, discs[k].radius, ang)) {
                add_disc_node(k, ang[0]);
                add_disc_node(k, ang[1]);
            }
        }
    }
    for (int i = 0; i < m; ++i) {
        for (int j = i + 1; j < m; ++j) {
            const Vec2 d = discs[j].center - discs[i].center;
            const double dist = d.norm();
            if (dist < 1e-12) continue;
            const double base = std::atan2(d.y, d.x);
            // External bitangents: same-side normals, <Cj - Ci, u(phi)> = ri - rj.
            const double ce = (discs[i].radius - discs[j].radius) / dist;
            if (std::abs(ce) <= 1.0) {
                const double off = std::acos(std::clamp(ce, -1.0, 1.0));
                for (const double s : {+1.0, -1.0}) {
                    const double phi = base + s * off;
                    add_disc_node(i, phi);
                    add_disc_node(j, phi);
                }
            }
            // Internal bitangents: opposite normals, <Cj - Ci, u(phi)> = ri + rj.
            const double ci = (discs[i].radius + discs[j].radius) / dist;
            if (ci <= 1.0) {
                const double off = std::acos(std::clamp(ci, -1.0, 1.0));
                for (const double s : {+1.0, -1.0}) {
                    const double phi = base + s * off;
                    add_disc_node(i, phi);
                    add_disc_node(j, phi + kPi);
                }
            }
        }
    }

    const int nn = static_cast<int>(nodes.size());
    std::vector<std::vector<EdgeOut>> adj(nn);
    auto add_edge = [&](int a, int b, double w, int arc_disc, double a0, double a1, bool rev) {
        adj[a].push_back({b, w, arc_disc, a0, a1, rev});
    };

    // Straight tangent segments between every node pair that clears all discs.
    for (int a = 0; a < nn; ++a) {
        for (int b = a + 1; b < nn; ++b) {
            if (nodes[a].disc >= 0 && nodes[a].disc == nodes[b].disc) continue;
            if (!segment_clear(nodes[a].pos, nodes[b].pos, discs)) continue;
            const double w = distance(nodes[a].pos, nodes[b].pos);
            add_edge(a, b, w, -1, 0, 0, false);
            add_edge(b, a, w, -1, 0, 0, false);
        }
    }

    // Arc edges between angularly consecutive tangent points on each disc.
    for (int k = 0; k < m; ++k) {
        std::vector<int> on_disc;
        for (int a = 0; a < nn; ++a)
            if (nodes[a].disc == k) on_disc.push_back(a);
        if (on_disc.size() < 2) continue;
        std::sort(on_disc.begin(), on_disc.end(),
                  [&](int a, int b) { return nodes[a].angle < nodes[b].angle; });
        const int cnt = static_cast<int>(on_disc.size());
        for (int s = 0; s < cnt; ++s) {
            const int a = on_disc[s];
            const int b = on_disc[(s + 1) % cnt];
            double a0 = nodes[a].angle;
            double a1 = nodes[b].angle;
            if (a1 <= a0) a1 += 2.0 * kPi;
            const double span = a1 - a0;
            if (span < 1e-12) continue;
            // Sample the arc at the flattening resolution against other discs.
            bool clear = true;
            const int steps = std::max(1, static_cast<int>(std::ceil(span / kArcStep)));
            for (int t = 0; t <= steps && clear; ++t) {
                const double ang = a0 + span * t / steps;
                const Vec2 p = discs[k].center +
                               Vec2{discs[k].radius * std::cos(ang), discs[k].radius * std::sin(ang)};
                clear = point_clear(p, discs, k);
            }
            if (!clear) continue;
            const double w = arc_chord_length(discs[k].radius, span);
            add_edge(a, b, w, k, a0, a1, false);
            add_edge(b, a, w, k, a0, a1, true);
        }
    }

    // Dijkstra from start (node 0) to goal (node 1).
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(nn, kInf);
    std::vector<int> parent(nn, -1);
    std::vector<int> parent_edge(nn, -1);
    using QItem = std::pair<double, int>;
    std::priority_queue<QItem, std::vector<QItem>, std::greater<>> q;
    dist[0] = 0.0;
    q.push({0.0, 0});
    while (!q.empty()) {
        const auto [d0, a] = q.top();
        q.pop();
        if (d0 > dist[a] + 1e-15) continue;
        if (a == 1) break;
        for (size_t e = 0; e < adj[a].size(); ++e) {
            const EdgeOut& edge = adj[a][e];
            const double nd = d0 + edge.weight;
            if (nd < dist[edge.to] - 1e-15) {
                dist[edge.to] = nd;
                parent[edge.to] = a;
                parent_edge[edge.to] = static_cast<int>(e);
                q.push({nd, edge.to});
            }
        }
    }
    if (!(dist[1] < kInf)) throw std::runtime_error("shortest_path: goal is unreachable");

    // Reconstruct, splicing flattened arcs in traversal direction.
    std::vector<int> chain;
    for (int v = 1; v != -1; v = parent[v]) chain.push_back(v);
    std::reverse(chain.begin(), chain.end());
    PathEstimate out;
    out.polyline.push_back(nodes[chain[0]].pos);
    for (size_t s = 1; s < chain.size(); ++s) {
        const int from = chain[s - 1];
        const int to = chain[s];
        const EdgeOut& edge = adj[from][static_cast<size_t>(parent_edge[to])];
        if (edge.arc_disc < 0) {
            out.polyline.push_back(nodes[to].pos);
        } else {
            const Disc& d = discs[static_cast<size_t>(edge.arc_disc)];
            std::vector<Vec2> pts;
            flatten_arc(d.center, d.radius, edge.a0, edge.a1, pts, true);
            if (edge.arc_reversed) std::reverse(pts.begin(), pts.end());
            out.polyline.insert(out.polyline.end(), pts.begin() + 1, pts.end());
        }
    }
    out.length = 0.0;
    for (size_t s = 1; s < out.polyline.size(); ++s)
        out.length += distance(out.polyline[s - 1], out.polyline[s]);
    out.travel_time = out.length / speed;
    return out;
}

double overlap_length(const PathEstimate& p1, const PathEstimate& p2, double clearance) {
    if (p1.polyline.size() < 2 || p2.polyline.size() < 2 || p1.length <= 0.0) return 0.0;
    constexpr double kCell = 0.05;
    const int cells = std::max(1, static_cast<int>(std::ceil(p1.length / kCell)));
    const double cell_len = p1.length / cells;

    auto point_at_arclen = [&](double s) {
        double acc = 0.0;
        for (size_t k = 1; k < p1.polyline.size(); ++k) {
            const double seg = distance(p1.polyline[k - 1], p1.polyline[k]);
            if (acc + seg >= s || k + 1 == p1.polyline.size()) {
                const double t = seg > 0.0 ? std::clamp((s - acc) / seg, 0.0, 1.0) : 0.0;
                return p1.polyline[k - 1] + t * (p1.polyline[k] - p1.polyline[k - 1]);
            }
            acc += seg;
        }
        return p1.polyline.back();
    };
    auto dist_to_p2 = [&](const Vec2& p) {
        double best = std::numeric_limits<double>::infinity();
        for (size_t k = 1; k < p2.polyline.size(); ++k)
            best = std::min(best, point_segment_distance(p, p2.polyline[k - 1], p2.polyline[k]));
        return best;
    };

    double total = 0.0;
    for (int c = 0; c < cells; ++c) {
        const Vec2 mid = point_at_arclen((c + 0.5) * cell_len);
        if (dist_to_p2(mid) < clearance) total += cell_len;
    }
    return total;
}

AssignmentProblem AssignmentProblem::zero(int n) {
    AssignmentProblem p;
    p.n = n;
    p.travel_times.assign(static_cast<size_t>(n) * n, 0.0);
    p.overlaps.assign(static_cast<size_t>(n) * n * n * n, 0.0);
    return p;
}

double assignment_objective(const AssignmentProblem& problem, std::span<const int> perm) {
    const int n = problem.n;
    double obj = 0.0;
    for (int i = 0; i < n; ++i) obj += problem.travel(i, perm[static_cast<size_t>(i)]);
    for (int i = 0; i < n; ++i)
        for (int i2 = i + 1; i2 < n; ++i2)
            obj += problem.overlap_weight *
                   problem.overlap(i, perm[static_cast<size_t>(i)], i2, perm[static_cast<size_t>(i2)]);
    return obj;
}

namespace {

void validate_problem(const AssignmentProblem& p) {
    const size_t n = static_cast<size_t>(p.n);
    if (p.n <= 0) throw std::invalid_argument("solve_assignment: empty problem");
    if (p.travel_times.size() != n * n)
        throw std::invalid_argument("solve_assignment: travel_times is not N x N");
    if (p.overlaps.size() != n * n * n * n)
        throw std::invalid_argument("solve_assignment: overlaps is not N^2 x N^2");
    for (double s : p.overlaps)
        if (s < 0.0) throw std::invalid_argument("solve_assignment: negative overlap entry");
}

void branch(const AssignmentProblem& p, std::vector<int>& perm, std::vector<bool>& used,
            int depth, double partial, const std::vector<double>& row_min,
            std::vector<int>& best_perm, double& best) {
    const int n = p.n;
    if (depth == n) {
        if (partial < best) {
            best = partial;
            best_perm = perm;
        }
        return;
    }
    // Admissible bound: finished partial cost plus per-row travel minima
    // (overlaps are validated non-negative).
    double bound = partial;
    for (int i = depth; i < n; ++i) bound += row_min[static_cast<size_t>(i)];
    if (bound >= best) return;
    for (int j = 0; j < n; ++j) {
        if (used[static_cast<size_t>(j)]) continue;
        double cost = partial + p.travel(depth, j);
        for (int i = 0; i < depth; ++i)
            cost += p.overlap_weight * p.overlap(i, perm[static_cast<size_t>(i)], depth, j);
        if (cost >= best) continue;
        perm[static_cast<size_t>(depth)] = j;
        used[static_cast<size_t>(j)] = true;
        branch(p, perm, used, depth + 1, cost, row_min, best_perm, best);
        used[static_cast<size_t>(j)] = false;
    }
}

Assignment solve_heuristic(const AssignmentProblem& p) {
    const int n = p.n;
    std::vector<int> perm(static_cast<size_t>(n), -1);
    std::vector<bool> used(static_cast<size_t>(n), false);
    for (int i = 0; i < n; ++i) {
        int best_j = -1;
        double best_cost = std::numeric_limits<double>::infinity();
        for (int j = 0; j < n; ++j) {
            if (used[static_cast<size_t>(j)]) continue;
            double cost = p.travel(i, j);
            for (int i2 = 0; i2 < i; ++i2)
                cost += p.overlap_weight * p.overlap(i2, perm[static_cast<size_t>(i2)], i, j);
            if (cost < best_cost) {
                best_cost = cost;
                best_j = j;
            }
        }
        perm[static_cast<size_t>(i)] = best_j;
        used[static_cast<size_t>(best_j)] = true;
    }
    double obj = assignment_objective(p, perm);
    bool improved = true;
    while (improved) {
        improved = false;
        for (int a = 0; a < n && !improved; ++a) {
            for (int b = a + 1; b < n && !improved; ++b) {
                std::swap(perm[static_cast<size_t>(a)], perm[static_cast<size_t>(b)]);
                const double trial = assignment_objective(p, perm);
                if (trial < obj - 1e-15) {
                    obj = trial;
                    improved = true;
                } else {
                    std::swap(perm[static_cast<size_t>(a)], perm[static_cast<size_t>(b)]);
                }
            }
        }
    }
    return {perm, obj};
}

}  // namespace

Assignment solve_assignment(const AssignmentProblem& problem) {
    validate_problem(problem);
    const int n = problem.n;
    if (n > 12) return solve_heuristic(problem);

    std::vector<double> row_min(static_cast<size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        double mn = std::numeric_limits<double>::infinity();
        for (int j = 0; j < n; ++j) mn = std::min(mn, problem.travel(i, j));
        row_min[static_cast<size_t>(i)] = mn;
    }
    std::vector<int> perm(static_cast<size_t>(n), -1);
    std::vector<int> best_perm;
    std::vector<bool> used(static_cast<size_t>(n), false);
    double best = std::numeric_limits<double>::infinity();
    branch(problem, perm, used, 0, 0.0, row_min, best_perm, best);
    return {best_perm, assignment_objective(problem, best_perm)};
}

AssignmentProblem build_assignment_problem(const std::vector<std::vector<PathEstimate>>& paths,
                                           double clearance, double overlap_weight) {
    const int n = static_cast<int>(paths.size());
    AssignmentProblem p = AssignmentProblem::zero(n);
    p.overlap_weight = overlap_weight;
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(paths[static_cast<size_t>(i)].size()) != n)
            throw std::invalid_argument("build_assignment_problem: path grid is not square");
        for (int j = 0; j < n; ++j)
            p.set_travel(i, j, paths[static_cast<size_t>(i)][static_cast<size_t>(j)].travel_time);
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int i2 = i + 1; i2 < n; ++i2)
                for (int j2 = 0; j2 < n; ++j2) {
                    const double ov = overlap_length(paths[static_cast<size_t>(i)][static_cast<size_t>(j)],
                                                     paths[static_cast<size_t>(i2)][static_cast<size_t>(j2)],
                                                     clearance);
                    p.set_overlap(i, j, i2, j2, ov);
                    p.set_overlap(i2, j2, i, j, ov);
                }
    return p;
}

}  // namespace herdsim

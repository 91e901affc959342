#include "herdsim/export.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace herdsim {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Stage stage_from_string(std::string_view name) {
    if (name == "capture") return Stage::Capture;
    if (name == "escort") return Stage::Escort;
    if (name == "done") return Stage::Done;
    if (name == "failed") return Stage::Failed;
    throw std::invalid_argument("trajectory csv: unknown stage '" + std::string(name) + "'");
}

double parse_double(std::string_view token) {
    if (token == "nan" || token == "-nan") return kNaN;
    double value = 0.0;
    const auto result = std::from_chars(token.data(), token.data() + token.size(), value);
    if (result.ec != std::errc{} || result.ptr != token.data() + token.size())
        throw std::invalid_argument("trajectory csv: bad number '" + std::string(token) + "'");
    return value;
}

std::vector<std::string_view> split_line(std::string_view line) {
    std::vector<std::string_view> tokens;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            tokens.push_back(line.substr(start));
            return tokens;
        }
        tokens.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

}  // namespace

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buffer[40];
    const auto result =
        std::to_chars(buffer, buffer + sizeof(buffer), value, std::chars_format::general, 9);
    return std::string(buffer, result.ptr);
}

std::string trajectory_csv(const TrajectoryLog& log, int defender_count) {
    std::ostringstream out;
    out << "t,stage,pc_updates,ax,ay,aux,auy";
    for (int i = 0; i < defender_count; ++i)
        out << ",d" << i << "x,d" << i << "y,d" << i << "ux,d" << i << "uy";
    for (int i = 0; i < defender_count; ++i) out << ",b" << i << "x,b" << i << "y";
    out << ",vfcx,vfcy";
    for (int i = 0; i < defender_count; ++i)
        out << ",J" << i << ",eh" << i << ",ev" << i << ",eth" << i << ",etv" << i << ",epsh" << i
            << ",epsv" << i << ",gh" << i << ",gv" << i << ",rho" << i;
    out << "\n";

    const std::size_t n = static_cast<std::size_t>(defender_count);
    for (const StepRecord& r : log.records) {
        if (r.defenders.size() != n || r.defender_cmds.size() != n || r.beacons.size() != n ||
            r.telemetry.size() != n)
            throw std::invalid_argument("trajectory csv: record width does not match defender count");
        out << format_number(r.t) << ',' << to_string(r.stage) << ',' << r.pc_updates << ','
            << format_number(r.attacker.x) << ',' << format_number(r.attacker.y) << ','
            << format_number(r.attacker_cmd.x) << ',' << format_number(r.attacker_cmd.y);
        for (std::size_t i = 0; i < n; ++i)
            out << ',' << format_number(r.defenders[i].x) << ',' << format_number(r.defenders[i].y)
                << ',' << format_number(r.defender_cmds[i].x) << ','
                << format_number(r.defender_cmds[i].y);
        for (std::size_t i = 0; i < n; ++i)
            out << ',' << format_number(r.beacons[i].x) << ',' << format_number(r.beacons[i].y);
        out << ',' << format_number(r.fence_cmd.x) << ',' << format_number(r.fence_cmd.y);
        for (std::size_t i = 0; i < n; ++i) {
            const DefenderTelemetry& tm = r.telemetry[i];
            out << ',' << format_number(tm.judgment) << ',' << format_number(tm.e_h) << ','
                << format_number(tm.e_v) << ',' << format_number(tm.e_tilde_h) << ','
                << format_number(tm.e_tilde_v) << ',' << format_number(tm.eps_h) << ','
                << format_number(tm.eps_v) << ',' << format_number(tm.g_h) << ','
                << format_number(tm.g_v) << ',' << format_number(tm.rho);
        }
        out << "\n";
    }
    return out.str();
}

TrajectoryLog parse_trajectory_csv(const std::string& text) {
    std::istringstream in(text);
    std::string header;
    if (!std::getline(in, header)) throw std::invalid_argument("trajectory csv: empty input");

    // Infer the defender count from the layout: 7 fixed head columns, then
    // 4 columns per defender, 2 per beacon, 2 fence columns, 10 telemetry
    // columns per defender -> 9 + 16 n.
    const std::size_t columns = split_line(header).size();
    if (columns < 9 + 16 || (columns - 9) % 16 != 0)
        throw std::invalid_argument("trajectory csv: unexpected column count");
    const std::size_t n = (columns - 9) / 16;

    TrajectoryLog log;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::vector<std::string_view> tokens = split_line(line);
        if (tokens.size() != columns)
            throw std::invalid_argument("trajectory csv: row width differs from header");
        std::size_t k = 0;
        StepRecord r;
        r.t = parse_double(tokens[k++]);
        r.stage = stage_from_string(tokens[k++]);
        r.pc_updates = static_cast<int>(parse_double(tokens[k++]));
        r.attacker.x = parse_double(tokens[k++]);
        r.attacker.y = parse_double(tokens[k++]);
        r.attacker_cmd.x = parse_double(tokens[k++]);
        r.attacker_cmd.y = parse_double(tokens[k++]);
        r.defenders.resize(n);
        r.defender_cmds.resize(n);
        r.beacons.resize(n);
        r.telemetry.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            r.defenders[i].x = parse_double(tokens[k++]);
            r.defenders[i].y = parse_double(tokens[k++]);
            r.defender_cmds[i].x = parse_double(tokens[k++]);
            r.defender_cmds[i].y = parse_double(tokens[k++]);
        }
        for (std::size_t i = 0; i < n; ++i) {
            r.beacons[i].x = parse_double(tokens[k++]);
            r.beacons[i].y = parse_double(tokens[k++]);
        }
        r.fence_cmd.x = parse_double(tokens[k++]);
        r.fence_cmd.y = parse_double(tokens[k++]);
        for (std::size_t i = 0; i < n; ++i) {
            DefenderTelemetry& tm = r.telemetry[i];
            tm.judgment = parse_double(tokens[k++]);
            tm.e_h = parse_double(tokens[k++]);
            tm.e_v = parse_double(tokens[k++]);
            tm.e_tilde_h = parse_double(tokens[k++]);
            tm.e_tilde_v = parse_double(tokens[k++]);
            tm.eps_h = parse_double(tokens[k++]);
            tm.eps_v = parse_double(tokens[k++]);
            tm.g_h = parse_double(tokens[k++]);
            tm.g_v = parse_double(tokens[k++]);
            tm.rho = parse_double(tokens[k++]);
        }
        log.records.push_back(std::move(r));
    }
    return log;
}

std::string outcome_json(const Outcome& outcome, const std::string& scenario_name,
                         std::uint64_t seed) {
    using nlohmann::json;
    const auto number_or_null = [](double v) {
        return std::isfinite(v) ? json(v) : json(nullptr);
    };

    json root;
    root["scenario"] = scenario_name;
    root["seed"] = seed;
    root["outcome"] = to_string(outcome.kind);
    if (outcome.failure)
        root["failure_reason"] = to_string(*outcome.failure);
    else
        root["failure_reason"] = nullptr;
    root["message"] = outcome.message;
    root["t_f1"] = number_or_null(outcome.t_f1);
    root["t_f2"] = number_or_null(outcome.t_f2);
    root["end_time"] = number_or_null(outcome.end_time);
    root["metrics"] = {
        {"min_escort_judgment", number_or_null(outcome.metrics.min_escort_judgment)},
        {"max_funnel_occupancy", number_or_null(outcome.metrics.max_funnel_occupancy)},
        {"max_plan_speed_ratio", number_or_null(outcome.metrics.max_plan_speed_ratio)},
        {"min_obstacle_clearance", number_or_null(outcome.metrics.min_obstacle_clearance)},
        {"pc_update_count", outcome.metrics.pc_update_count},
    };
    return root.dump(2) + "\n";
}

void write_text_file(const std::string& path, const std::string& content) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
        if (ec) throw std::runtime_error("cannot create directory " + p.parent_path().string());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace herdsim

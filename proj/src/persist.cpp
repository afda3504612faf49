#include "igr/persist.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "igr/dataset.hpp"

namespace igr {

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

const char* termination_name(Termination t) {
    switch (t) {
        case Termination::completed: return "completed";
        case Termination::converged: return "converged";
        case Termination::diverged: return "diverged";
        case Termination::stopped_by_criterion: return "stopped-by-criterion";
    }
    return "unknown";
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out << content;
        if (!out) {
            out.close();
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw IoError("write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("rename failed for " + path.string());
    }
}

std::string trajectory_csv(const Trajectory& trajectory, double lambda) {
    bool with_acc = false;
    for (const auto& row : trajectory.rows)
        if (!std::isnan(row.train_accuracy) || !std::isnan(row.test_accuracy))
            with_acc = true;

    std::ostringstream out;
    out << "iteration,physical_time,E,R_IG,lambda,E_modified,slope,param_norm";
    if (with_acc) out << ",train_accuracy,test_accuracy";
    out << '\n';
    for (const auto& row : trajectory.rows) {
        out << row.iteration << ',' << format_double(row.time) << ','
            << format_double(row.loss) << ',' << format_double(row.r_ig) << ','
            << format_double(lambda) << ',' << format_double(row.loss_modified) << ','
            << format_double(row.slope) << ',' << format_double(row.param_norm);
        if (with_acc)
            out << ',' << format_double(row.train_accuracy) << ','
                << format_double(row.test_accuracy);
        out << '\n';
    }
    return out.str();
}

std::string sweep_csv(const SweepResult& result) {
    std::ostringstream out;
    out << "h,width,m,lambda,stop_iteration,E,R_IG,slope,train_acc,test_acc,excluded,"
           "exclusion_reason\n";
    for (const auto& c : result.cells) {
        out << format_double(c.h) << ',' << c.width << ',' << c.m << ','
            << format_double(c.lambda) << ',' << c.stop_iteration << ','
            << format_double(c.loss) << ',' << format_double(c.r_ig) << ','
            << format_double(c.slope) << ',' << format_double(c.train_accuracy) << ','
            << format_double(c.test_accuracy) << ',' << (c.excluded ? 1 : 0) << ','
            << c.exclusion_reason << '\n';
    }
    return out.str();
}

std::string robustness_csv(const std::vector<RobustnessPoint>& points) {
    std::ostringstream out;
    out << "sigma,mean_test_accuracy,std_test_accuracy,mean_slope,std_slope\n";
    for (const auto& p : points)
        out << format_double(p.sigma) << ',' << format_double(p.mean_accuracy) << ','
            << format_double(p.std_accuracy) << ',' << format_double(p.mean_slope)
            << ',' << format_double(p.std_slope) << '\n';
    return out.str();
}

void persist_run(const std::filesystem::path& out_dir,
                 const std::vector<std::pair<std::string, std::string>>& files,
                 RunManifest manifest) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir.string());

    std::vector<std::filesystem::path> written;
    try {
        for (const auto& [name, content] : files) {
            const auto path = out_dir / name;
            write_file_atomic(path, content);
            written.push_back(path);
            manifest.outputs.push_back(
                {name, fnv1a(content.data(), content.size())});
        }

        nlohmann::json j;
        j["artifact_version"] = "1.0.0";
        j["command"] = manifest.command;
        j["config"] = manifest.config;
        j["termination_reasons"] = manifest.termination_reasons;
        j["outputs"] = nlohmann::json::array();
        for (const auto& e : manifest.outputs) {
            char hex[17];
            std::snprintf(hex, sizeof hex, "%016llx",
                          static_cast<unsigned long long>(e.checksum));
            j["outputs"].push_back({{"path", e.path}, {"fnv1a64", hex}});
        }
        const auto now = std::chrono::system_clock::now();
        j["written_at_unix"] =
            std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch())
                .count();
        write_file_atomic(out_dir / "manifest.json", j.dump(2) + "\n");
    } catch (const IoError&) {
        for (const auto& p : written) {
            std::error_code rec;
            std::filesystem::remove(p, rec);
        }
        throw;
    }
}

std::map<std::string, std::string> parse_config(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        const auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        if (out.count(key))
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": duplicate key " + key);
        out[key] = value;
    }
    if (!out.count("schema_version"))
        throw ConfigError("config is missing schema_version");
    return out;
}

std::map<std::string, std::string> load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

namespace {
template <typename T, typename Conv>
std::vector<T> parse_list(const std::string& csv, Conv conv) {
    std::vector<T> out;
    std::istringstream in(csv);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (item.empty()) throw ConfigError("empty element in list: " + csv);
        out.push_back(conv(item));
    }
    if (out.empty()) throw ConfigError("empty list");
    return out;
}
}  // namespace

std::vector<double> parse_double_list(const std::string& csv) {
    return parse_list<double>(csv, [](const std::string& s) {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw ConfigError("bad number: " + s);
        return v;
    });
}

std::vector<std::size_t> parse_size_list(const std::string& csv) {
    return parse_list<std::size_t>(csv, [](const std::string& s) {
        std::size_t pos = 0;
        const long v = std::stol(s, &pos);
        if (pos != s.size() || v < 0) throw ConfigError("bad integer: " + s);
        return static_cast<std::size_t>(v);
    });
}

}  // namespace igr

#pragma once

// CSV/state serialization helpers. Numbers are printed with %.17g so that
// identical runs produce byte-identical artifacts.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nuvlasov/grid.hpp"
#include "nuvlasov/propagator.hpp"

namespace nuvlasov {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class CsvWriter {
  public:
    explicit CsvWriter(const std::string& path) : os_(path) {
        if (!os_) throw std::runtime_error("cannot open " + path + " for writing");
    }
    void comment(const std::string& line) { os_ << "# " << line << "\n"; }
    void header(const std::string& line) { os_ << line << "\n"; }
    template <typename... Cells>
    void row(Cells... cells) {
        bool first = true;
        ((os_ << (first ? "" : ",") << cell(cells), first = false), ...);
        os_ << "\n";
    }

  private:
    static std::string cell(double v) { return fmt_double(v); }
    static std::string cell(int v) { return std::to_string(v); }
    static std::string cell(std::uint64_t v) { return std::to_string(v); }
    static std::string cell(const std::string& s) { return s; }
    static std::string cell(const char* s) { return s; }
    std::ofstream os_;
};

inline void write_state_csv(const std::string& path, const DistributionState& st,
                            const PhaseSpaceGrid& grid) {
    CsvWriter w(path);
    w.comment("d=" + std::to_string(grid.dim()) + " ngr=" + std::to_string(grid.ngr()) +
              " L=" + fmt_double(grid.box_length()) + " V=" + fmt_double(grid.vmax()) +
              " time=" + fmt_double(st.time));
    w.header("i,re,im");
    for (std::uint64_t i = 0; i < st.values.size(); ++i)
        w.row(i, st.values[i].real(), st.values[i].imag());
}

struct LoadedState {
    PhaseSpaceGrid grid;
    DistributionState state;
};

inline LoadedState load_state_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(is, line) || line.rfind("# ", 0) != 0)
        throw std::runtime_error("state file missing metadata header: " + path);
    std::map<std::string, std::string> meta;
    {
        std::istringstream ss(line.substr(2));
        std::string tok;
        while (ss >> tok) {
            const auto eq = tok.find('=');
            if (eq != std::string::npos) meta[tok.substr(0, eq)] = tok.substr(eq + 1);
        }
    }
    for (const char* k : {"d", "ngr", "L", "V", "time"})
        if (!meta.count(k)) throw std::runtime_error(std::string("state header lacks ") + k);
    PhaseSpaceGrid grid(std::stoi(meta["d"]), std::stoi(meta["ngr"]), std::stod(meta["L"]),
                        std::stod(meta["V"]));
    DistributionState st;
    st.time = std::stod(meta["time"]);
    st.values.resize(grid.total_count());
    std::getline(is, line);  // column header
    std::uint64_t count = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string c0, c1, c2;
        if (!std::getline(ss, c0, ',') || !std::getline(ss, c1, ',') || !std::getline(ss, c2, ','))
            throw std::runtime_error("malformed state row: " + line);
        const std::uint64_t i = std::stoull(c0);
        if (i >= st.values.size()) throw std::runtime_error("state row index out of range");
        st.values[i] = {std::stod(c1), std::stod(c2)};
        ++count;
    }
    if (count != st.values.size()) throw std::runtime_error("state file row count mismatch");
    return {grid, st};
}

inline void ensure_dir(const std::string& dir) {
    std::filesystem::create_directories(dir);
}

}  // namespace nuvlasov

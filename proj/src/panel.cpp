#include "graphcp/panel.hpp"

#include "csv.hpp"
#include "graphcp/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <tuple>

namespace graphcp {

PanelDataset::PanelDataset(std::size_t units, std::size_t times, std::vector<std::string> variables)
    : units_(units), times_(times), variable_names_(std::move(variables)),
      weather_(units * times * variable_names_.size(), 0.0), counts_(units * times, 0) {}

DataSplit split(std::size_t times, double train, double calibration, double test) {
    if (times < 3) throw Error(ErrorKind::BadFractions, "need at least 3 time steps, got " + std::to_string(times));
    if (!(train > 0.0) || !(calibration > 0.0) || !(test > 0.0) ||
        std::abs(train + calibration + test - 1.0) > 1e-9)
        throw Error(ErrorKind::BadFractions, "fractions must be positive and sum to 1");
    const auto n_train = static_cast<std::size_t>(std::llround(train * static_cast<double>(times)));
    const auto n_cal = static_cast<std::size_t>(std::llround(calibration * static_cast<double>(times)));
    if (n_train == 0 || n_cal == 0 || n_train + n_cal >= times)
        throw Error(ErrorKind::BadFractions, "a split range would be empty for T=" + std::to_string(times));
    return {{0, n_train}, {n_train, n_train + n_cal}, {n_train + n_cal, times}};
}

namespace {

struct IndexBounds {
    std::size_t units{0};
    std::size_t times{0};
};

std::size_t to_index(std::string_view field, std::string_view what, std::size_t line_no, std::string_view name) {
    std::int64_t v = 0;
    if (!csv::parse_int(field, v) || v < 0)
        throw Error(ErrorKind::MalformedRow, csv::row_error(what, line_no, "bad " + std::string(name) + " index"));
    return static_cast<std::size_t>(v);
}

} // namespace

PanelDataset parse_panel(std::istream& weather_in, std::istream& counts_in) {
    std::string line;

    // counts: unit,time,count
    constexpr std::string_view counts_what = "counts file";
    csv::expect_header(counts_in, "unit,time,count", counts_what);
    std::map<std::pair<std::size_t, std::size_t>, std::int64_t> counts;
    IndexBounds count_bounds;
    std::size_t line_no = 1;
    while (csv::next_row(counts_in, line, line_no)) {
        const auto f = csv::split(line);
        if (f.size() != 3) throw Error(ErrorKind::MalformedRow, csv::row_error(counts_what, line_no, "expected 3 fields"));
        const auto i = to_index(f[0], counts_what, line_no, "unit");
        const auto t = to_index(f[1], counts_what, line_no, "time");
        std::int64_t n = 0;
        if (!csv::parse_int(f[2], n)) {
            double x = 0.0;
            if (!csv::parse_double(f[2], x) || !std::isfinite(x))
                throw Error(ErrorKind::MalformedRow, csv::row_error(counts_what, line_no, "unparseable count"));
            if (x < 0.0) throw Error(ErrorKind::NegativeCount, csv::row_error(counts_what, line_no, std::string(f[2])));
            if (x != std::floor(x))
                throw Error(ErrorKind::NonIntegerCount, csv::row_error(counts_what, line_no, std::string(f[2])));
            n = static_cast<std::int64_t>(x);
        }
        if (n < 0) throw Error(ErrorKind::NegativeCount, csv::row_error(counts_what, line_no, std::string(f[2])));
        if (!counts.emplace(std::pair(i, t), n).second)
            throw Error(ErrorKind::MalformedRow, csv::row_error(counts_what, line_no, "duplicate cell"));
        count_bounds.units = std::max(count_bounds.units, i + 1);
        count_bounds.times = std::max(count_bounds.times, t + 1);
    }

    // weather: unit,time,variable,value
    constexpr std::string_view weather_what = "weather file";
    csv::expect_header(weather_in, "unit,time,variable,value", weather_what);
    std::vector<std::string> variables;
    std::map<std::tuple<std::size_t, std::size_t, std::size_t>, double> weather;
    IndexBounds weather_bounds;
    line_no = 1;
    while (csv::next_row(weather_in, line, line_no)) {
        const auto f = csv::split(line);
        if (f.size() != 4) throw Error(ErrorKind::MalformedRow, csv::row_error(weather_what, line_no, "expected 4 fields"));
        const auto i = to_index(f[0], weather_what, line_no, "unit");
        const auto t = to_index(f[1], weather_what, line_no, "time");
        if (f[2].empty()) throw Error(ErrorKind::MalformedRow, csv::row_error(weather_what, line_no, "empty variable"));
        auto it = std::find(variables.begin(), variables.end(), f[2]);
        if (it == variables.end()) it = variables.insert(variables.end(), std::string(f[2]));
        const auto m = static_cast<std::size_t>(it - variables.begin());
        double x = 0.0;
        if (!csv::parse_double(f[3], x) || !std::isfinite(x))
            throw Error(ErrorKind::MalformedRow, csv::row_error(weather_what, line_no, "non-finite or unparseable value"));
        if (!weather.emplace(std::tuple(i, t, m), x).second)
            throw Error(ErrorKind::MalformedRow, csv::row_error(weather_what, line_no, "duplicate cell"));
        weather_bounds.units = std::max(weather_bounds.units, i + 1);
        weather_bounds.times = std::max(weather_bounds.times, t + 1);
    }

    if (count_bounds.units != weather_bounds.units || count_bounds.times != weather_bounds.times)
        throw Error(ErrorKind::DimensionMismatch,
                    "weather covers " + std::to_string(weather_bounds.units) + "x" +
                        std::to_string(weather_bounds.times) + " (units x times), counts cover " +
                        std::to_string(count_bounds.units) + "x" + std::to_string(count_bounds.times));
    if (variables.empty()) throw Error(ErrorKind::DimensionMismatch, "weather file has no variables");

    PanelDataset panel(count_bounds.units, count_bounds.times, variables);
    const auto expected_counts = panel.units() * panel.times();
    if (counts.size() != expected_counts) {
        for (std::size_t i = 0; i < panel.units(); ++i)
            for (std::size_t t = 0; t < panel.times(); ++t)
                if (!counts.contains({i, t}))
                    throw Error(ErrorKind::MissingCell,
                                "counts cell (" + std::to_string(i) + "," + std::to_string(t) + ")");
    }
    for (const auto& [key, n] : counts) panel.count(key.first, key.second) = n;

    if (weather.size() != expected_counts * panel.variables()) {
        for (std::size_t i = 0; i < panel.units(); ++i)
            for (std::size_t t = 0; t < panel.times(); ++t)
                for (std::size_t m = 0; m < panel.variables(); ++m)
                    if (!weather.contains({i, t, m}))
                        throw Error(ErrorKind::MissingCell, "weather cell (" + std::to_string(i) + "," +
                                                                std::to_string(t) + "," + std::to_string(m) + ")");
    }
    for (const auto& [key, x] : weather) panel.weather(std::get<0>(key), std::get<1>(key), std::get<2>(key)) = x;
    return panel;
}

PanelDataset load_panel(const std::filesystem::path& weather_file, const std::filesystem::path& counts_file) {
    std::ifstream weather(weather_file);
    if (!weather) throw Error(ErrorKind::IoError, "cannot open " + weather_file.string());
    std::ifstream counts(counts_file);
    if (!counts) throw Error(ErrorKind::IoError, "cannot open " + counts_file.string());
    return parse_panel(weather, counts);
}

void write_panel(std::ostream& weather, std::ostream& counts, const PanelDataset& panel) {
    weather << "unit,time,variable,value\n";
    counts << "unit,time,count\n";
    for (std::size_t i = 0; i < panel.units(); ++i) {
        for (std::size_t t = 0; t < panel.times(); ++t) {
            for (std::size_t m = 0; m < panel.variables(); ++m)
                weather << i << ',' << t << ',' << panel.variable_names()[m] << ','
                        << csv::format(panel.weather(i, t, m)) << '\n';
            counts << i << ',' << t << ',' << panel.count(i, t) << '\n';
        }
    }
}

void write_panel(const std::filesystem::path& weather_file, const std::filesystem::path& counts_file,
                 const PanelDataset& panel) {
    std::ofstream weather(weather_file);
    if (!weather) throw Error(ErrorKind::IoError, "cannot write " + weather_file.string());
    std::ofstream counts(counts_file);
    if (!counts) throw Error(ErrorKind::IoError, "cannot write " + counts_file.string());
    write_panel(weather, counts, panel);
}

} // namespace graphcp

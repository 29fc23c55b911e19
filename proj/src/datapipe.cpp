#include "gar/datapipe.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace gar {

std::string split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "?";
}

Split split_from_name(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    throw std::invalid_argument("unknown split: " + s);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    cells.push_back(cur);
    return cells;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size() && std::isfinite(out);
}

}  // namespace

ReturnPanel load_prices(const std::string& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw std::runtime_error("cannot open price CSV: " + csv_path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty CSV: " + csv_path);
    auto header = split_csv_line(line);
    if (header.size() < 2 || header[0] != "date")
        throw std::runtime_error("CSV header must be 'date,TICKER1,...': " + csv_path);

    ReturnPanel panel;
    panel.assets.assign(header.begin() + 1, header.end());
    const std::size_t M = panel.assets.size();

    std::vector<std::string> dates;
    std::vector<std::vector<double>> prices;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != M + 1)
            throw std::runtime_error(csv_path + ":" + std::to_string(lineno) +
                                     ": expected " + std::to_string(M + 1) + " cells, got " +
                                     std::to_string(cells.size()));
        std::vector<double> row(M);
        bool usable = true;
        for (std::size_t j = 0; j < M; ++j) {
            double p;
            if (cells[j + 1].empty()) {
                usable = false;  // missing cell: drop the row, count it
            } else if (!parse_double(cells[j + 1], p)) {
                throw std::runtime_error(csv_path + ":" + std::to_string(lineno) +
                                         ": unparseable price '" + cells[j + 1] + "'");
            } else if (p <= 0.0) {
                usable = false;
            } else {
                row[j] = p;
            }
        }
        if (!dates.empty() && usable && cells[0] <= dates.back())
            throw std::runtime_error(csv_path + ":" + std::to_string(lineno) +
                                     ": dates not strictly increasing");
        if (usable) {
            dates.push_back(cells[0]);
            prices.push_back(std::move(row));
        } else {
            ++panel.dropped_rows;
        }
    }
    if (prices.size() < 2)
        throw std::runtime_error(csv_path + ": fewer than 2 usable price rows");

    const std::size_t n = prices.size() - 1;
    panel.returns = Tensor::zeros(n, M);
    panel.dates.assign(dates.begin() + 1, dates.end());
    for (std::size_t t = 0; t < n; ++t)
        for (std::size_t j = 0; j < M; ++j)
            panel.returns.at(t, j) = std::log(prices[t + 1][j] / prices[t][j]);
    return panel;
}

WindowDataset make_windows(const ReturnPanel& panel, int cond_len, int horizon, int stride) {
    const int n = static_cast<int>(panel.n_rows());
    const int M = static_cast<int>(panel.n_assets());
    if (cond_len < 1 || horizon < 1 || stride < 1)
        throw std::invalid_argument("make_windows: cond_len, horizon, stride must be >= 1");
    if (n < cond_len + horizon)
        throw std::runtime_error("make_windows: panel has " + std::to_string(n) +
                                 " rows, need at least " + std::to_string(cond_len + horizon));
    WindowDataset ds;
    ds.assets = panel.assets;
    ds.cond_len = cond_len;
    ds.horizon = horizon;
    ds.stride = stride;
    const int count = (n - cond_len - horizon) / stride + 1;
    ds.samples.reserve(static_cast<std::size_t>(count));
    for (int s = 0; s < count; ++s) {
        const int o = s * stride;
        WindowSample w;
        w.origin = o;
        w.origin_date = panel.dates[static_cast<std::size_t>(o)];
        w.context = Tensor::zeros(static_cast<std::size_t>(M), static_cast<std::size_t>(cond_len));
        w.scenario = Tensor::zeros(static_cast<std::size_t>(M), static_cast<std::size_t>(horizon));
        for (int j = 0; j < M; ++j) {
            for (int t = 0; t < cond_len; ++t)
                w.context.at(static_cast<std::size_t>(j), static_cast<std::size_t>(t)) =
                    panel.returns.at(static_cast<std::size_t>(o + t), static_cast<std::size_t>(j));
            for (int t = 0; t < horizon; ++t)
                w.scenario.at(static_cast<std::size_t>(j), static_cast<std::size_t>(t)) =
                    panel.returns.at(static_cast<std::size_t>(o + cond_len + t),
                                     static_cast<std::size_t>(j));
        }
        ds.samples.push_back(std::move(w));
    }
    return ds;
}

void split_dataset(WindowDataset& ds, const std::array<double, 3>& ratios) {
    const double total = ratios[0] + ratios[1] + ratios[2];
    if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument("split ratios must sum to 1");
    const std::size_t n = ds.samples.size();
    std::size_t n_train = static_cast<std::size_t>(std::floor(ratios[0] * static_cast<double>(n)));
    std::size_t n_val = static_cast<std::size_t>(std::floor(ratios[1] * static_cast<double>(n)));
    const std::size_t n_test = n - n_train - n_val;
    if (n_train == 0 || n_val == 0 || n_test == 0)
        throw std::runtime_error("split: a split would be empty (" + std::to_string(n_train) +
                                 "/" + std::to_string(n_val) + "/" + std::to_string(n_test) + ")");
    for (std::size_t i = 0; i < n; ++i)
        ds.samples[i].split = i < n_train            ? Split::train
                              : i < n_train + n_val ? Split::val
                                                    : Split::test;
    // A sample whose scenario window reaches the next split's first origin row
    // belongs to the earlier split; origin-ordered assignment already puts it
    // there, so only the boundary rows themselves need no reshuffling.
}

bool leakage_free(const WindowDataset& ds) {
    const int window = ds.cond_len + ds.horizon;
    int end_train = -1, end_val = -1;
    int begin_val = -1, begin_test = -1;
    for (const auto& w : ds.samples) {
        const int last = w.origin + window - 1;
        switch (w.split) {
            case Split::train: end_train = std::max(end_train, last); break;
            case Split::val:
                end_val = std::max(end_val, last);
                begin_val = begin_val < 0 ? w.origin : std::min(begin_val, w.origin);
                break;
            case Split::test:
                begin_test = begin_test < 0 ? w.origin : std::min(begin_test, w.origin);
                break;
        }
    }
    if (begin_val >= 0 && end_train >= begin_val) return false;
    if (begin_test >= 0 && end_val >= begin_test) return false;
    return true;
}

namespace {

void write_block(std::ofstream& out, const std::vector<double>& d) {
    out.write(reinterpret_cast<const char*>(d.data()),
              static_cast<std::streamsize>(d.size() * sizeof(double)));
}

void read_block(std::ifstream& in, std::vector<double>& d) {
    in.read(reinterpret_cast<char*>(d.data()),
            static_cast<std::streamsize>(d.size() * sizeof(double)));
    if (!in) throw std::runtime_error("truncated binary cache");
}

}  // namespace

void save_panel(const ReturnPanel& panel, const std::string& path) {
    nlohmann::json h;
    h["kind"] = "return_panel";
    h["dates"] = panel.dates;
    h["assets"] = panel.assets;
    h["dropped_rows"] = panel.dropped_rows;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write cache: " + path);
    out << h.dump() << '\n';
    write_block(out, panel.returns.data);
}

ReturnPanel load_panel(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open cache: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("truncated cache header: " + path);
    nlohmann::json h = nlohmann::json::parse(line);
    if (h.value("kind", "") != "return_panel")
        throw std::runtime_error(path + " is not a return-panel cache");
    ReturnPanel panel;
    panel.dates = h.at("dates").get<std::vector<std::string>>();
    panel.assets = h.at("assets").get<std::vector<std::string>>();
    panel.dropped_rows = h.value("dropped_rows", 0u);
    panel.returns = Tensor::zeros(panel.dates.size(), panel.assets.size());
    read_block(in, panel.returns.data);
    return panel;
}

void save_dataset(const WindowDataset& ds, const std::string& path) {
    nlohmann::json h;
    h["kind"] = "window_dataset";
    h["assets"] = ds.assets;
    h["cond_len"] = ds.cond_len;
    h["horizon"] = ds.horizon;
    h["stride"] = ds.stride;
    auto& samples = h["samples"] = nlohmann::json::array();
    for (const auto& w : ds.samples)
        samples.push_back({{"origin", w.origin},
                           {"origin_date", w.origin_date},
                           {"split", split_name(w.split)}});
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write cache: " + path);
    out << h.dump() << '\n';
    for (const auto& w : ds.samples) {
        write_block(out, w.context.data);
        write_block(out, w.scenario.data);
    }
}

WindowDataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open cache: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("truncated cache header: " + path);
    nlohmann::json h = nlohmann::json::parse(line);
    if (h.value("kind", "") != "window_dataset")
        throw std::runtime_error(path + " is not a window-dataset cache");
    WindowDataset ds;
    ds.assets = h.at("assets").get<std::vector<std::string>>();
    ds.cond_len = h.at("cond_len").get<int>();
    ds.horizon = h.at("horizon").get<int>();
    ds.stride = h.at("stride").get<int>();
    const std::size_t M = ds.assets.size();
    for (const auto& meta : h.at("samples")) {
        WindowSample w;
        w.origin = meta.at("origin").get<int>();
        w.origin_date = meta.at("origin_date").get<std::string>();
        w.split = split_from_name(meta.at("split").get<std::string>());
        w.context = Tensor::zeros(M, static_cast<std::size_t>(ds.cond_len));
        w.scenario = Tensor::zeros(M, static_cast<std::size_t>(ds.horizon));
        read_block(in, w.context.data);
        read_block(in, w.scenario.data);
        ds.samples.push_back(std::move(w));
    }
    return ds;
}

void write_returns_csv(const ReturnPanel& panel, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write CSV: " + path);
    out << "date";
    for (const auto& a : panel.assets) out << ',' << a;
    out << '\n';
    char buf[32];
    for (std::size_t t = 0; t < panel.n_rows(); ++t) {
        out << panel.dates[t];
        for (std::size_t j = 0; j < panel.n_assets(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", panel.returns.at(t, j));
            out << ',' << buf;
        }
        out << '\n';
    }
}

}  // namespace gar

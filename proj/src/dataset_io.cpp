#include "gma/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "gma/errors.hpp"

namespace gma {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_double(const std::string& s, const std::string& file, int line_no,
                    const std::string& col) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
        throw_data("dataset: " + file + ":" + std::to_string(line_no) + ": column '" + col +
                   "' is not a finite number: '" + s + "'");
    return v;
}

long parse_int(const std::string& s, const std::string& file, int line_no,
               const std::string& col) {
    long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw_data("dataset: " + file + ":" + std::to_string(line_no) + ": column '" + col +
                   "' is not an integer: '" + s + "'");
    return v;
}

}  // namespace

MultiSubjectDataset read_dataset_stream(std::istream& in, const std::string& name) {
    std::string line;
    if (!std::getline(in, line)) throw_data("dataset: " + name + ": empty file, no subjects");
    std::vector<std::string> header = split_csv_line(line);
    std::map<std::string, int> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = static_cast<int>(i);
    for (const char* required : {"subject_id", "t", "z", "m", "r"})
        if (!col.count(required))
            throw_data("dataset: " + name + ":1: missing column '" + std::string(required) + "'");
    if (header.size() != 5)
        throw_data("dataset: " + name + ":1: expected exactly the columns subject_id,t,z,m,r");

    struct Raw {
        std::vector<double> z, m, r;
        long next_t = 1;
    };
    std::vector<std::string> order;
    std::map<std::string, Raw> subjects;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> f = split_csv_line(line);
        if (f.size() != header.size())
            throw_data("dataset: " + name + ":" + std::to_string(line_no) +
                       ": wrong number of fields");
        const std::string& id = f[static_cast<std::size_t>(col["subject_id"])];
        if (id.empty())
            throw_data("dataset: " + name + ":" + std::to_string(line_no) + ": empty subject_id");
        long t = parse_int(f[static_cast<std::size_t>(col["t"])], name, line_no, "t");
        auto it = subjects.find(id);
        if (it == subjects.end()) {
            order.push_back(id);
            it = subjects.emplace(id, Raw{}).first;
        }
        Raw& raw = it->second;
        if (t != raw.next_t)
            throw_data("dataset: " + name + ":" + std::to_string(line_no) + ": subject '" + id +
                       "' has t = " + std::to_string(t) + ", expected " +
                       std::to_string(raw.next_t) + " (gap or disorder)");
        raw.next_t = t + 1;
        raw.z.push_back(parse_double(f[static_cast<std::size_t>(col["z"])], name, line_no, "z"));
        raw.m.push_back(parse_double(f[static_cast<std::size_t>(col["m"])], name, line_no, "m"));
        raw.r.push_back(parse_double(f[static_cast<std::size_t>(col["r"])], name, line_no, "r"));
    }
    if (order.empty()) throw_data("dataset: " + name + ": no subjects");

    MultiSubjectDataset data;
    data.subjects.reserve(order.size());
    for (const std::string& id : order) {
        const Raw& raw = subjects[id];
        SubjectSeries s;
        s.id = id;
        s.z = Eigen::Map<const Eigen::VectorXd>(raw.z.data(), static_cast<long>(raw.z.size()));
        s.m = Eigen::Map<const Eigen::VectorXd>(raw.m.data(), static_cast<long>(raw.m.size()));
        s.r = Eigen::Map<const Eigen::VectorXd>(raw.r.data(), static_cast<long>(raw.r.size()));
        data.subjects.push_back(std::move(s));
    }
    return data;
}

MultiSubjectDataset read_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw_data("dataset: cannot open '" + path + "'");
    return read_dataset_stream(in, path);
}

void write_dataset_stream(const MultiSubjectDataset& data, std::ostream& out) {
    out << "subject_id,t,z,m,r\n";
    char buf[32];
    auto fmt = [&buf](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    for (const SubjectSeries& s : data.subjects)
        for (int t = 0; t < s.length(); ++t)
            out << s.id << ',' << (t + 1) << ',' << fmt(s.z[t]) << ',' << fmt(s.m[t]) << ','
                << fmt(s.r[t]) << '\n';
}

void write_dataset(const MultiSubjectDataset& data, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw_data("dataset: cannot write '" + path + "'");
    write_dataset_stream(data, out);
}

void demean_subjects(MultiSubjectDataset& data) {
    for (SubjectSeries& s : data.subjects) {
        s.z.array() -= s.z.mean();
        s.m.array() -= s.m.mean();
        s.r.array() -= s.r.mean();
    }
}

}  // namespace gma

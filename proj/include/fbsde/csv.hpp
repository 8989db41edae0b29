#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

namespace fbsde {

/// Full-precision, locale-independent number formatting so identical runs
/// serialize to identical bytes.
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Comma-separated rows accumulated in memory; callers decide where the
/// bytes go. An optional mirror stream receives every line as it is built so
/// partially completed runs still leave their rows on disk.
class CsvBuilder {
public:
    explicit CsvBuilder(std::ofstream* mirror = nullptr) : mirror_(mirror) {}

    void header(const std::string& line) { append_line(line); }

    CsvBuilder& cell(const std::string& v) {
        if (!row_.empty()) row_ += ',';
        row_ += v;
        return *this;
    }
    CsvBuilder& cell(double v) { return cell(format_double(v)); }
    CsvBuilder& cell(int v) { return cell(std::to_string(v)); }
    CsvBuilder& cell(long v) { return cell(std::to_string(v)); }
    CsvBuilder& empty_cell() { return cell(std::string()); }

    void end_row() {
        append_line(row_);
        row_.clear();
    }

    const std::string& str() const {
        if (!row_.empty()) throw std::logic_error("CsvBuilder: unterminated row");
        return text_;
    }

private:
    void append_line(const std::string& line) {
        text_ += line;
        text_ += '\n';
        if (mirror_ && mirror_->is_open()) {
            (*mirror_) << line << '\n';
            mirror_->flush();
        }
    }

    std::string text_;
    std::string row_;
    std::ofstream* mirror_;
};

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os << content;
}

}  // namespace fbsde

#pragma once

#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace dlc {

/// Minimal CSV writer. Floats are serialized with 17 significant digits so
/// artifacts round-trip exactly and reruns are byte-identical.
class CsvWriter {
  public:
    explicit CsvWriter(std::ostream& os) : os_(os) {}

    static std::string format(double v) {
        std::ostringstream s;
        s.precision(17);
        s << v;
        return s.str();
    }

    void row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) os_ << ',';
            os_ << fields[i];
        }
        os_ << '\n';
    }

    void begin_row() { first_ = true; }
    void field(const std::string& s) {
        if (!first_) os_ << ',';
        first_ = false;
        os_ << s;
    }
    void field(double v) { field(format(v)); }
    void end_row() { os_ << '\n'; }

  private:
    std::ostream& os_;
    bool first_ = true;
};

}  // namespace dlc

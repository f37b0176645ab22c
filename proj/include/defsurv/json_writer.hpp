#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace defsurv {

/// Streaming JSON emitter with insertion-ordered keys and fixed 17-digit
/// number formatting, so equal inputs always serialize to equal bytes.
/// Non-finite numbers become null. Keys appear in call order; the caller is
/// responsible for valid nesting.
class JsonWriter {
 public:
  explicit JsonWriter(std::ostream& out) : out_(out) {}

  JsonWriter& begin_object() {
    separate();
    out_ << '{';
    fresh_ = true;
    return *this;
  }
  JsonWriter& end_object() {
    out_ << '}';
    fresh_ = false;
    return *this;
  }
  JsonWriter& begin_array() {
    separate();
    out_ << '[';
    fresh_ = true;
    return *this;
  }
  JsonWriter& end_array() {
    out_ << ']';
    fresh_ = false;
    return *this;
  }

  JsonWriter& key(const std::string& name) {
    separate();
    write_string(name);
    out_ << ':';
    fresh_ = true;
    return *this;
  }

  JsonWriter& value(double v) {
    separate();
    if (!std::isfinite(v)) {
      out_ << "null";
    } else {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out_ << buf;
    }
    return *this;
  }
  JsonWriter& value(int v) {
    separate();
    out_ << v;
    return *this;
  }
  JsonWriter& value(long v) {
    separate();
    out_ << v;
    return *this;
  }
  JsonWriter& value(std::size_t v) {
    separate();
    out_ << v;
    return *this;
  }
  JsonWriter& value(bool v) {
    separate();
    out_ << (v ? "true" : "false");
    return *this;
  }
  JsonWriter& value(const std::string& v) {
    separate();
    write_string(v);
    return *this;
  }
  JsonWriter& value(const char* v) { return value(std::string(v)); }
  JsonWriter& null() {
    separate();
    out_ << "null";
    return *this;
  }

 private:
  void separate() {
    if (!fresh_) out_ << ',';
    fresh_ = false;
  }
  void write_string(const std::string& s) {
    out_ << '"';
    for (char c : s) {
      switch (c) {
        case '"': out_ << "\\\""; break;
        case '\\': out_ << "\\\\"; break;
        case '\n': out_ << "\\n"; break;
        case '\t': out_ << "\\t"; break;
        case '\r': out_ << "\\r"; break;
        default:
          if (static_cast<unsigned char>(c) < 0x20) {
            char buf[8];
            std::snprintf(buf, sizeof(buf), "\\u%04x", c);
            out_ << buf;
          } else {
            out_ << c;
          }
      }
    }
    out_ << '"';
  }

  std::ostream& out_;
  bool fresh_ = true;
};

}  // namespace defsurv

// Copyright 2026 The stefan-kan Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Minimal CSV output with locale-independent number formatting.

#include <cstddef>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include "stefan_kan/error.hpp"
#include "stefan_kan/kan_io.hpp"

namespace stefan_kan {

class CsvWriter {
 public:
  CsvWriter(const std::string& path, std::vector<std::string> header) : path_(path), columns_(header.size()) {
    os_.open(path);
    if (!os_) throw Error("cannot write " + path);
    row(header);
  }

  void row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw ShapeError(path_ + ": row has " + std::to_string(cells.size()) + " cells");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i != 0) os_ << ',';
      os_ << cells[i];
    }
    os_ << '\n';
  }

  void flush() { os_.flush(); }

 private:
  std::string path_;
  std::size_t columns_;
  std::ofstream os_;
};

inline std::string cell(double v) { return format_double(v); }
inline std::string cell(long long v) { return std::to_string(v); }
inline std::string cell(std::size_t v) { return std::to_string(v); }
inline std::string cell(int v) { return std::to_string(v); }
inline std::string cell(const std::string& s) { return s; }
inline std::string cell(const char* s) { return s; }

}  // namespace stefan_kan

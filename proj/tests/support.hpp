#ifndef LUMPCOUPLE_TESTS_SUPPORT_HPP
#define LUMPCOUPLE_TESTS_SUPPORT_HPP

#include <string>
#include <vector>

#include "lumpcouple/lumpcouple.hpp"

namespace lctest {

using lumpcouple::Rational;

inline Rational q(const std::string& s) { return lumpcouple::Num<Rational>::parse(s); }

inline std::vector<Rational> qs(std::initializer_list<const char*> v) {
  std::vector<Rational> out;
  for (auto s : v) out.push_back(q(s));
  return out;
}

template <class F>
lumpcouple::ErrorKind error_kind_of(F&& f) {
  try {
    f();
  } catch (const lumpcouple::Error& e) {
    return e.kind();
  }
  throw std::runtime_error("expected an Error");
}

}  // namespace lctest

#endif

#include <iostream>

#include "sknn/acceptance.hpp"

int main() {
  const int failures = sknn::run_acceptance(std::cout);
  return failures == 0 ? 0 : 2;
}

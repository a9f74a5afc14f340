#pragma once

#include <iosfwd>

#include "genst/toy/model.hpp"

namespace genst::toy {

// Versioned JSON tensor dump with shape metadata ("genst-toy-v1").
void save_checkpoint(std::ostream& out, const ToyModelParams& params);
ToyModelParams load_checkpoint(std::istream& in);

}  // namespace genst::toy

#ifndef MUHS_MUHS_HPP
#define MUHS_MUHS_HPP

#include "muhs/analysis.hpp"
#include "muhs/cli.hpp"
#include "muhs/dynamics.hpp"
#include "muhs/field.hpp"
#include "muhs/field_io.hpp"
#include "muhs/io.hpp"
#include "muhs/lagrange.hpp"
#include "muhs/muops.hpp"

#endif  // MUHS_MUHS_HPP

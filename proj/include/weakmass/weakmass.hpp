#pragma once

#include "weakmass/bessel.hpp"
#include "weakmass/config.hpp"
#include "weakmass/constants.hpp"
#include "weakmass/detector.hpp"
#include "weakmass/dynamics.hpp"
#include "weakmass/errors.hpp"
#include "weakmass/hilbert.hpp"
#include "weakmass/kd.hpp"
#include "weakmass/parallel.hpp"
#include "weakmass/pipeline.hpp"
#include "weakmass/validation.hpp"
#include "weakmass/weakmeas.hpp"

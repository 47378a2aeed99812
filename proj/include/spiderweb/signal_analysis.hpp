#pragma once

#include "spiderweb/butterworth.hpp"
#include "spiderweb/pose.hpp"
#include "spiderweb/spectrum.hpp"
#include "spiderweb/transient.hpp"

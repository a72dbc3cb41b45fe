# Management commands for detectors app

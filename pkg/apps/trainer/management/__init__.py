# Management commands for trainer app

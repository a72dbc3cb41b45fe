# Management commands

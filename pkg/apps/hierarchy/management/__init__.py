# Management commands for hierarchy app

# Management commands for metrics app

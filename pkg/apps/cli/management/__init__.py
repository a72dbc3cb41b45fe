# Management commands for cli app
